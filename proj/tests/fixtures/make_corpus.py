#!/usr/bin/env python3
"""Builds the synthetic migration corpus under tests/fixtures/corpus.

Every change site is labeled with the KBs whose matchers should fire on it,
both for the committed KB set and for the KB set after the keyword edit in
expected/kb_edit.json. Hunk ids are computed here independently of the tool.
"""
import hashlib
import json
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent / "corpus"
CONTEXT = 3

PATH = "path-separators"
DRAWING = "system-drawing-migration"
LOGGING = "logging-deps"
JAEGER = "jaeger-deployment"
DOCKER = "dockerfile-additions"
SIDECAR = "k8s-sidecars"

# The KB edit exercised by the suite-delta scenario.
EDIT = {"kb_file": "logging-deps.kb.md", "old": "EventLog", "new": "Serilog.Sinks.Console"}


def filler(kind, tag, n):
    forms = {
        "cs": '        var {t}{i} = Step{t}({i});',
        "ps1": 'Write-Output "{t} step {i}"',
        "cmd": "echo {t} step {i}",
        "sh": 'echo "{t} step {i}"',
        "yaml": "  {t}{i}: value-{i}",
        "csproj": '    <Compile Include="{t}{i}.cs" />',
        "json": '  "{t}Key{i}": {i},',
        "docker": "RUN echo {t}-{i}",
        "md": "Note {i} about {t}.",
    }
    return [forms[kind].format(t=tag, i=i) for i in range(n)]


def hunk_id(file_new, old_start, new_start, canonical):
    h = hashlib.sha256()
    for field in [file_new, str(old_start), str(new_start)] + canonical:
        h.update(field.encode() + b"\0")
    return h.hexdigest()[:16]


def rng(start, length):
    return str(start) if length == 1 else f"{start},{length}"


class Site:
    def __init__(self, old, new, kbs, after=None, anchor=None):
        self.old = old
        self.new = new
        self.kbs = sorted(kbs)
        self.after = sorted(after) if after is not None else self.kbs
        self.anchor = anchor  # insert after this line when old is empty


class Commit:
    def __init__(self, subject, body):
        self.subject = subject
        self.body = body
        self.ops = []

    def edit(self, path, old, new, kbs, after=None):
        self.ops.append(("edit", path, Site(old, new, kbs, after)))
        return self

    def insert(self, path, anchor, new, kbs, after=None):
        self.ops.append(("edit", path, Site([], new, kbs, after, anchor)))
        return self

    def add(self, path, lines, kbs, after=None, noeol=False):
        self.ops.append(("add", path, Site([], lines, kbs, after), noeol))
        return self

    def delete(self, path, kbs, after=None):
        self.ops.append(("delete", path, Site([], [], kbs, after)))
        return self

    def rename(self, old_path, new_path):
        self.ops.append(("rename", old_path, new_path))
        return self

    def binary(self, path, added=False):
        self.ops.append(("binary", path, added))
        return self


class Service:
    def __init__(self, sid):
        self.sid = sid
        self.files = {}
        self.noeol = set()
        self.commits = []

    def file(self, path, lines, noeol=False):
        self.files[path] = list(lines)
        if noeol:
            self.noeol.add(path)

    def commit(self, subject, body=""):
        c = Commit(subject, body)
        self.commits.append(c)
        return c


def commit_id(sid, k):
    return hashlib.sha1(f"{sid}/{k}".encode()).hexdigest()


def render_hunks(path_new, lines, sites, noeol, labels, meta):
    """Applies `sites` to `lines`; returns (new lines, hunk text)."""
    located = []
    for s in sites:
        if s.old:
            hits = [i for i in range(len(lines) - len(s.old) + 1) if lines[i:i + len(s.old)] == s.old]
            assert len(hits) == 1, (path_new, s.old, hits)
            located.append((hits[0], hits[0] + len(s.old), s))
        else:
            hits = [i for i, l in enumerate(lines) if l == s.anchor]
            assert len(hits) == 1, (path_new, s.anchor)
            located.append((hits[0] + 1, hits[0] + 1, s))
    located.sort(key=lambda t: t[0])
    for (a, b), (c, _) in zip([(x[0], x[1]) for x in located], [(x[0], x[1]) for x in located[1:]]):
        assert c - b > 2 * CONTEXT, (path_new, "sites too close", b, c)
    n = len(lines)
    out = []
    offset = 0
    for s0, e0, site in located:
        cb = max(0, s0 - CONTEXT)
        ce = min(n, e0 + CONTEXT)
        body = []  # (tag, text, is_old_last, is_new_last)
        for i in range(cb, s0):
            body.append([" ", lines[i], False])
        for i in range(s0, e0):
            body.append(["-", lines[i], False])
        for t in site.new:
            body.append(["+", t, False])
        for i in range(e0, ce):
            body.append([" ", lines[i], False])
        if noeol and ce == n:
            if e0 < n:
                body[-1][2] = True
            else:
                # the final line itself changes: both sides end without newline
                dels = [k for k, b in enumerate(body) if b[0] == "-"]
                adds = [k for k, b in enumerate(body) if b[0] == "+"]
                assert dels and adds
                body[dels[-1]][2] = True
                body[adds[-1]][2] = True
        old_len = ce - cb
        new_len = old_len - (e0 - s0) + len(site.new)
        old_start = cb + 1 if old_len > 0 else cb
        new_start = cb + offset + 1 if new_len > 0 else cb + offset
        out.append(f"@@ -{rng(old_start, old_len)} +{rng(new_start, new_len)} @@\n")
        canonical = []
        for tag, text, marker in body:
            out.append(tag + text + "\n")
            canonical.append(tag + text)
            if marker:
                out.append("\\ No newline at end of file\n")
                canonical.append("\\")
        labels.append(dict(meta, file=path_new, old_start=old_start,
                           hunk_id=hunk_id(path_new, old_start, new_start, canonical),
                           kbs=site.kbs, kbs_after_edit=site.after))
        offset += len(site.new) - (e0 - s0)
    new_lines = list(lines)
    for s0, e0, site in reversed(located):
        new_lines[s0:e0] = site.new
    return new_lines, "".join(out)


def whole_file_hunk(path, lines, added, site, noeol, labels, meta):
    canonical = []
    out = []
    tag = "+" if added else "-"
    n = len(lines)
    out.append(f"@@ -0,0 +{rng(1, n)} @@\n" if added else f"@@ -{rng(1, n)} +0,0 @@\n")
    for k, text in enumerate(lines):
        out.append(tag + text + "\n")
        canonical.append(tag + text)
        if noeol and k == n - 1:
            out.append("\\ No newline at end of file\n")
            canonical.append("\\")
    old_start, new_start = (0, 1) if added else (1, 0)
    labels.append(dict(meta, file=path, old_start=old_start, hunk_id=hunk_id(path, old_start, new_start, canonical),
                       kbs=site.kbs, kbs_after_edit=site.after))
    return "".join(out)


def blob(text):
    return hashlib.sha1(text.encode()).hexdigest()[:7]


def build_patch(svc, k, c, cid, labels):
    meta = {"commit": cid}
    order = []
    edits = {}
    renames = {}
    for op in c.ops:
        key = op[1]
        if op[0] == "rename":
            renames[op[1]] = op[2]
        if key not in order:
            order.append(key)
        if op[0] == "edit":
            edits.setdefault(key, []).append(op[2])
    diff = []
    stats = []
    for path in order:
        ops = [o for o in c.ops if o[1] == path]
        kinds = {o[0] for o in ops}
        if "add" in kinds:
            _, _, site, noeol = ops[0]
            svc.files[path] = list(site.new)
            if noeol:
                svc.noeol.add(path)
            diff.append(f"diff --git a/{path} b/{path}\nnew file mode 100644\nindex 0000000..{blob(path)}\n"
                        f"--- /dev/null\n+++ b/{path}\n")
            diff.append(whole_file_hunk(path, site.new, True, site, noeol, labels, meta))
            stats.append((path, len(site.new), 0))
        elif "delete" in kinds:
            site = ops[0][2]
            lines = svc.files.pop(path)
            noeol = path in svc.noeol
            diff.append(f"diff --git a/{path} b/{path}\ndeleted file mode 100644\nindex {blob(path)}..0000000\n"
                        f"--- a/{path}\n+++ /dev/null\n")
            diff.append(whole_file_hunk(path, lines, False, site, noeol, labels, meta))
            stats.append((path, 0, len(lines)))
        elif "binary" in kinds:
            added = ops[0][2]
            if added:
                diff.append(f"diff --git a/{path} b/{path}\nnew file mode 100644\nindex 0000000..{blob(path)}\n"
                            f"Binary files /dev/null and b/{path} differ\n")
            else:
                diff.append(f"diff --git a/{path} b/{path}\nindex {blob(path)}..{blob(path + cid)} 100644\n"
                            f"Binary files a/{path} and b/{path} differ\n")
            stats.append((path, None, None))
        else:
            new_path = renames.get(path, path)
            lines = svc.files[path]
            noeol = path in svc.noeol
            header = f"diff --git a/{path} b/{new_path}\n"
            if new_path != path:
                header += f"similarity index 88%\nrename from {path}\nrename to {new_path}\n"
            sites = edits.get(path, [])
            if sites:
                header += f"index {blob(path)}..{blob(new_path + cid)} 100644\n--- a/{path}\n+++ b/{new_path}\n"
                new_lines, hunks = render_hunks(new_path, lines, sites, noeol, labels, meta)
                diff.append(header + hunks)
                stats.append((new_path, sum(len(s.new) for s in sites), sum(len(s.old) for s in sites)))
            else:
                new_lines = lines
                diff.append(header)
                stats.append((new_path, 0, 0))
            del svc.files[path]
            svc.files[new_path] = new_lines
            if noeol:
                svc.noeol.discard(path)
                svc.noeol.add(new_path)
    head = (f"From {cid} Mon Sep 17 00:00:00 2001\nFrom: Dana Reyes <dana.reyes@example.com>\n"
            f"Date: Tue, {k + 1} Apr 2024 10:{k:02d}:00 +0000\nSubject: [PATCH] {c.subject}\n\n")
    if c.body:
        head += c.body + "\n\n"
    head += "---\n"
    for path, plus, minus in stats:
        if plus is None:
            head += f" {path} | Bin\n"
        else:
            head += f" {path} | {plus + minus} {'+' * plus}{'-' * minus}".rstrip() + "\n"
    head += f" {len(stats)} file{'s' if len(stats) != 1 else ''} changed\n\n"
    return head + "".join(diff) + "-- \n2.43.0\n\n"


# ---------------------------------------------------------------- billing-api

def billing():
    s = Service("billing-api")
    proj = "src/Billing.Api/Billing.Api.csproj"
    s.file(proj, [
        '<Project Sdk="Microsoft.NET.Sdk.Web">',
        "  <PropertyGroup>",
        "    <TargetFramework>net6.0</TargetFramework>",
        "    <RuntimeIdentifier>win-x64</RuntimeIdentifier>",
        "  </PropertyGroup>",
        *filler("csproj", "Billing", 8),
        "  <ItemGroup>",
        '    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />',
        '    <PackageReference Include="Serilog.Sinks.EventLog" Version="3.1.0" />',
        '    <PackageReference Include="Newtonsoft.Json" Version="13.0.1" />',
        "  </ItemGroup>",
        *filler("csproj", "Ledger", 8),
        "</Project>",
    ])
    renderer = "src/Billing.Api/Invoices/InvoiceRenderer.cs"
    s.file(renderer, [
        "using System;",
        "using System.Drawing;",
        "using System.Drawing.Imaging;",
        "using System.IO;",
        "",
        "namespace Billing.Api.Invoices;",
        "",
        "public class InvoiceRenderer",
        "{",
        *filler("cs", "layout", 6),
        "    public byte[] RenderLogo(string path)",
        "    {",
        "        using var image = System.Drawing.Image.FromFile(path);",
        "        using var stream = new MemoryStream();",
        "        image.Save(stream, System.Drawing.Imaging.ImageFormat.Png);",
        "        return stream.ToArray();",
        "    }",
        *filler("cs", "totals", 6),
        "    public decimal Total(decimal net, decimal rate) => net + net * rate;",
        *filler("cs", "footer", 4),
        "}",
    ])
    deploy = "scripts/deploy.ps1"
    s.file(deploy, [
        'param([string]$Environment = "prod")',
        '$ErrorActionPreference = "Stop"',
        *filler("ps1", "prepare", 5),
        "Set-Location C:\\services\\billing",
        "Copy-Item C:\\services\\billing\\config\\appsettings.json C:\\services\\billing\\bin\\",
        *filler("ps1", "migrate", 7),
        'New-Service -Name JaegerAgent -BinaryPathName "C:\\jaeger\\jaeger-agent.exe"',
        '$env:JAEGER_AGENT_HOST = "localhost"',
        *filler("ps1", "verify", 5),
        'Write-Output "Deployment of $Environment finished"',
    ])
    s.file("scripts/build.cmd", [
        "@echo off",
        "setlocal",
        "msbuild src\\Billing.Api\\Billing.Api.csproj /p:Configuration=Release",
        "endlocal",
    ])
    k8s = "deploy/k8s/billing.yaml"
    s.file(k8s, [
        "apiVersion: apps/v1",
        "kind: Deployment",
        "metadata:",
        "  name: billing-api",
        "spec:",
        "  replicas: 2",
        "  template:",
        "    metadata:",
        "      annotations:",
        '        prometheus.io/scrape: "true"',
        *filler("yaml", "billingMeta", 4),
        "    spec:",
        "      nodeSelector:",
        "        kubernetes.io/os: windows",
        "      containers:",
        "        - name: billing-api",
        "          image: contoso.azurecr.io/billing-api:win-1.4",
        *filler("yaml", "billingTail", 3),
    ])
    settings = "src/Billing.Api/appsettings.json"
    s.file(settings, [
        "{",
        '  "Logging": { "LogLevel": { "Default": "Information" } },',
        *filler("json", "Billing", 5),
        '  "Serilog": {',
        '    "WriteTo": [ { "Name": "EventLog", "Args": { "source": "Billing" } } ]',
        "  },",
        *filler("json", "Limits", 6),
        '  "ConnectionStrings": { "Db": "Server=sql01;Database=billing" }',
        "}",
    ])
    s.file("README.md", [
        "# Billing API",
        "",
        "Computes invoices and renders them as PDF.",
        *filler("md", "billing", 6),
        "Owned by the payments team.",
    ], noeol=True)
    s.file("src/Billing.Api/Program.cs", [
        "var builder = WebApplication.CreateBuilder(args);",
        *filler("cs", "boot", 8),
        "var app = builder.Build();",
        "app.MapGet(\"/health\", () => \"ok\");",
        *filler("cs", "routes", 8),
        "app.Run();",
    ])

    s.commit("Move package references to cross-platform libraries",
             "ImageSharp replaces System.Drawing.Common; logs go to syslog.").edit(
        proj, ['    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />',
               '    <PackageReference Include="Serilog.Sinks.EventLog" Version="3.1.0" />'],
        ['    <PackageReference Include="SixLabors.ImageSharp" Version="3.1.3" />',
         '    <PackageReference Include="Serilog.Sinks.Syslog" Version="2.0.0" />'],
        [DRAWING, LOGGING]).edit(
        proj, ["    <TargetFramework>net6.0</TargetFramework>"], ["    <TargetFramework>net8.0</TargetFramework>"], [])
    s.commit("Render invoice logos with ImageSharp").edit(
        renderer, ["using System.Drawing;", "using System.Drawing.Imaging;"],
        ["using SixLabors.ImageSharp;", "using SixLabors.ImageSharp.Formats.Png;"], [DRAWING]).edit(
        renderer, ["        using var image = System.Drawing.Image.FromFile(path);",
                   "        using var stream = new MemoryStream();",
                   "        image.Save(stream, System.Drawing.Imaging.ImageFormat.Png);"],
        ["        using var image = SixLabors.ImageSharp.Image.Load(path);",
         "        using var stream = new MemoryStream();",
         "        image.Save(stream, new PngEncoder());"], [DRAWING])
    s.commit("Fix rounding of invoice totals").edit(
        renderer, ["    public decimal Total(decimal net, decimal rate) => net + net * rate;"],
        ["    public decimal Total(decimal net, decimal rate) => Math.Round(net + net * rate, 2);"], [])
    s.commit("Use POSIX paths in the deploy script").edit(
        deploy, ["Set-Location C:\\services\\billing",
                 "Copy-Item C:\\services\\billing\\config\\appsettings.json C:\\services\\billing\\bin\\"],
        ["Set-Location /srv/billing", "Copy-Item /srv/billing/config/appsettings.json /srv/billing/bin/"], [PATH])
    s.commit("Run the jaeger agent as a daemonset").edit(
        deploy, ['New-Service -Name JaegerAgent -BinaryPathName "C:\\jaeger\\jaeger-agent.exe"',
                 '$env:JAEGER_AGENT_HOST = "localhost"'],
        ['$env:JAEGER_AGENT_HOST = "jaeger-agent.monitoring"'], [PATH, JAEGER]).add(
        "deploy/k8s/jaeger-agent.yaml", [
            "apiVersion: apps/v1",
            "kind: DaemonSet",
            "metadata:",
            "  name: jaeger-agent",
            "spec:",
            "  template:",
            "    spec:",
            "      containers:",
            "        - name: jaeger-agent",
            "          image: jaegertracing/jaeger-agent:1.52",
            "          args: [\"--reporter.grpc.host-port=jaeger-collector:14250\"]",
        ], [JAEGER])
    s.commit("Log the target environment during deploys").insert(
        deploy, '$ErrorActionPreference = "Stop"', ['Write-Output "Deploying billing to $Environment"'], [])
    s.commit("Replace the Windows build script").delete("scripts/build.cmd", [PATH]).add(
        "scripts/build.sh", ["#!/bin/sh", "set -e", "dotnet publish src/Billing.Api/Billing.Api.csproj -c Release -o out"],
        [])
    s.commit("Add a Linux container image").add("Dockerfile", [
        "FROM mcr.microsoft.com/dotnet/aspnet:8.0",
        "WORKDIR /app",
        "COPY out/ .",
        "EXPOSE 8080",
        'ENTRYPOINT ["dotnet", "Billing.Api.dll"]',
    ], [DOCKER])
    s.commit("Enable the dapr sidecar").insert(
        k8s, '        prometheus.io/scrape: "true"',
        ['        dapr.io/enabled: "true"', "        dapr.io/app-id: billing-api"], [SIDECAR])
    s.commit("Schedule billing on Linux nodes").edit(
        k8s, ["        kubernetes.io/os: windows", "      containers:", "        - name: billing-api",
              "          image: contoso.azurecr.io/billing-api:win-1.4"],
        ["        kubernetes.io/os: linux", "      containers:", "        - name: billing-api",
         "          image: contoso.azurecr.io/billing-api:1.5"], [])
    s.commit("Write logs to syslog").edit(
        settings, ['    "WriteTo": [ { "Name": "EventLog", "Args": { "source": "Billing" } } ]'],
        ['    "WriteTo": [ { "Name": "Console" }, { "Name": "Syslog", "Args": { "host": "localhost" } } ]'],
        [LOGGING], after=[])
    s.commit("Point billing at the new database host").edit(
        settings, ['  "ConnectionStrings": { "Db": "Server=sql01;Database=billing" }'],
        ['  "ConnectionStrings": { "Db": "Server=sql02;Database=billing" }'], [])
    s.commit("Refresh logo and ownership note").binary("assets/logo.png").edit(
        "README.md", ["Owned by the payments team."], ["Owned by the billing platform team."], [])
    s.commit("Add the console sink package").insert(
        proj, '    <PackageReference Include="Newtonsoft.Json" Version="13.0.1" />',
        ['    <PackageReference Include="Serilog.Sinks.Console" Version="5.0.1" />'], [], after=[LOGGING])
    return s


# ---------------------------------------------------------------- image-resizer

def resizer():
    s = Service("image-resizer")
    proj = "src/ImageResizer/ImageResizer.csproj"
    s.file(proj, [
        '<Project Sdk="Microsoft.NET.Sdk">',
        "  <PropertyGroup>",
        "    <TargetFramework>net6.0</TargetFramework>",
        "  </PropertyGroup>",
        *filler("csproj", "Resize", 6),
        "  <ItemGroup>",
        '    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />',
        "  </ItemGroup>",
        *filler("csproj", "Encode", 7),
        "  <ItemGroup>",
        '    <PackageReference Include="Microsoft.Extensions.Logging.EventLog" Version="6.0.0" />',
        "  </ItemGroup>",
        "</Project>",
    ])
    code = "src/ImageResizer/Resizer.cs"
    s.file(code, [
        "using System;",
        "using System.Drawing;",
        "using System.Drawing.Drawing2D;",
        "",
        "namespace ImageResizer;",
        "",
        "public sealed class Resizer",
        "{",
        *filler("cs", "probe", 5),
        "    public int ClampWidth(int width) => width;",
        *filler("cs", "scale", 7),
        "    public void Resize(string source, string target, int width)",
        "    {",
        "        using var input = new System.Drawing.Bitmap(source);",
        "        using var output = new System.Drawing.Bitmap(input, width, input.Height * width / input.Width);",
        "        output.Save(target);",
        "    }",
        "}",
    ])
    cache = "src/ImageResizer/Thumbnails/ThumbnailCache.cs"
    s.file(cache, [
        "namespace ImageResizer.Thumbnails;",
        "",
        "public sealed class ThumbnailCache",
        "{",
        *filler("cs", "cache", 6),
        "    public object Load(string path) => System.Drawing.Image.FromFile(path);",
        *filler("cs", "evict", 3),
        "}",
    ])
    run = "scripts/run.ps1"
    s.file(run, [
        '$root = "C:\\resizer"',
        *filler("ps1", "warmup", 7),
        "& dotnet ImageResizer.dll --queue thumbnails",
        *filler("ps1", "shutdown", 3),
    ])
    s.file("Dockerfile", [
        "FROM mcr.microsoft.com/dotnet/framework/runtime:4.8-windowsservercore-ltsc2019",
        *filler("docker", "layer", 8),
        'ENTRYPOINT ["ImageResizer.exe"]',
    ])
    values = "deploy/helm/values.yaml"
    s.file(values, [
        "image:",
        "  repository: contoso.azurecr.io/image-resizer",
        "  tag: 2.3.0",
        *filler("yaml", "resources", 7),
        "podAnnotations:",
        '  sidecar.istio.io/inject: "false"',
        *filler("yaml", "probes", 3),
    ])
    tests = "tests/ImageResizer.Tests/ResizerTests.cs"
    s.file(tests, [
        "namespace ImageResizer.Tests;",
        "",
        "public class ResizerTests",
        "{",
        *filler("cs", "fixture", 5),
        "    [Fact] public void ClampKeepsWidth() => Assert.Equal(10, new Resizer().ClampWidth(10));",
        *filler("cs", "cases", 3),
        "}",
    ])
    program = "src/ImageResizer/Program.cs"
    s.file(program, [
        "var builder = Host.CreateApplicationBuilder(args);",
        *filler("cs", "host", 5),
        "builder.Logging.AddEventLog();",
        *filler("cs", "workers", 5),
        "builder.Build().Run();",
    ])
    s.file("README.md", ["# Image resizer", "", "Generates thumbnails for uploaded images."])

    s.commit("Switch to SkiaSharp").edit(
        proj, ['    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />'],
        ['    <PackageReference Include="SkiaSharp" Version="2.88.7" />'], [DRAWING])
    s.commit("Replace the event log provider").edit(
        proj, ['    <PackageReference Include="Microsoft.Extensions.Logging.EventLog" Version="6.0.0" />'],
        ['    <PackageReference Include="Serilog.Sinks.Syslog" Version="2.0.0" />'], [LOGGING])
    s.commit("Port the resizer to SkiaSharp").edit(
        code, ["using System.Drawing;", "using System.Drawing.Drawing2D;"], ["using SkiaSharp;"], [DRAWING]).edit(
        code, ["        using var input = new System.Drawing.Bitmap(source);",
               "        using var output = new System.Drawing.Bitmap(input, width, input.Height * width / input.Width);",
               "        output.Save(target);"],
        ["        using var input = SkiaSharp.SKBitmap.Decode(source);",
         "        using var output = input.Resize(new SKImageInfo(width, input.Height * width / input.Width), "
         "SKFilterQuality.High);",
         "        File.WriteAllBytes(target, output.Encode(SKEncodedImageFormat.Png, 90).ToArray());"], [DRAWING])
    s.commit("Clamp requested widths").edit(
        code, ["    public int ClampWidth(int width) => width;"],
        ["    public int ClampWidth(int width) => Math.Clamp(width, 16, 4096);"], [])
    s.commit("Move the thumbnail cache").rename(cache, "src/ImageResizer/Caching/ThumbnailCache.cs").edit(
        cache, ["namespace ImageResizer.Thumbnails;"], ["namespace ImageResizer.Caching;"], []).edit(
        cache, ["    public object Load(string path) => System.Drawing.Image.FromFile(path);"],
        ["    public object Load(string path) => SkiaSharp.SKImage.FromEncodedData(path);"], [DRAWING])
    s.commit("Use a Linux install root").edit(
        run, ['$root = "C:\\resizer"'], ['$root = "/opt/resizer"'], [PATH])
    s.commit("Retry the worker on failure").edit(
        run, ["& dotnet ImageResizer.dll --queue thumbnails"],
        ["for ($i = 0; $i -lt 3; $i++) {", "    & dotnet ImageResizer.dll --queue thumbnails", "    if ($?) { break }",
         "}"], [])
    s.commit("Build on the Linux runtime image").edit(
        "Dockerfile", ["FROM mcr.microsoft.com/dotnet/framework/runtime:4.8-windowsservercore-ltsc2019"],
        ["FROM mcr.microsoft.com/dotnet/runtime:8.0-jammy"], [DOCKER])
    s.commit("Start the resizer through dotnet").edit(
        "Dockerfile", ['ENTRYPOINT ["ImageResizer.exe"]'], ['ENTRYPOINT ["dotnet", "ImageResizer.dll"]'], [DOCKER])
    s.commit("Inject the istio sidecar").edit(
        values, ['  sidecar.istio.io/inject: "false"'], ['  sidecar.istio.io/inject: "true"'], [SIDECAR])
    s.commit("Cover the upper clamp bound").insert(
        tests, "    [Fact] public void ClampKeepsWidth() => Assert.Equal(10, new Resizer().ClampWidth(10));",
        ["    [Fact] public void ClampCapsWidth() => Assert.Equal(4096, new Resizer().ClampWidth(9000));"], [])
    s.commit("Add a sample image").binary("assets/sample.jpg", added=True).edit(
        "README.md", ["Generates thumbnails for uploaded images."],
        ["Generates thumbnails for uploaded images.", "See assets/sample.jpg for an example input."], [])
    s.commit("Log to the console").edit(
        program, ["builder.Logging.AddEventLog();"], ["builder.Logging.AddConsole();"], [LOGGING], after=[])
    return s


# ---------------------------------------------------------------- notification-worker

def notifier():
    s = Service("notification-worker")
    install = "install/install-agents.ps1"
    s.file(install, [
        'New-Service -Name "JaegerAgent" -BinaryPathName "C:\\Program Files\\Jaeger\\jaeger-agent.exe"',
        '[Environment]::SetEnvironmentVariable("JAEGER_AGENT_HOST", "localhost", "Machine")',
        "Start-Service JaegerAgent",
    ])
    k8s = "deploy/k8s/worker.yaml"
    s.file(k8s, [
        "apiVersion: apps/v1",
        "kind: Deployment",
        "metadata:",
        "  name: notification-worker",
        "spec:",
        "  replicas: 1",
        *filler("yaml", "strategy", 4),
        "  template:",
        "    metadata:",
        "      annotations:",
        '        prometheus.io/port: "9102"',
        *filler("yaml", "podMeta", 4),
        "    spec:",
        "      containers:",
        "        - name: worker",
        "          image: contoso.azurecr.io/notification-worker:3.2",
        *filler("yaml", "workerEnv", 3),
        "          env:",
        "            - name: JAEGER_AGENT_HOST",
        "              value: localhost",
        *filler("yaml", "volumes", 4),
    ])
    settings_cs = "src/Worker/Settings.cs"
    s.file(settings_cs, [
        "namespace Worker;",
        "",
        "public static class Settings",
        "{",
        *filler("cs", "settings", 4),
        '    public static string AgentHost => Environment.GetEnvironmentVariable("JAEGER_AGENT_HOST") ?? "localhost";',
        *filler("cs", "queues", 3),
        "}",
    ])
    proj = "src/Worker/Worker.csproj"
    s.file(proj, [
        '<Project Sdk="Microsoft.NET.Sdk.Worker">',
        *filler("csproj", "Worker", 5),
        "  <ItemGroup>",
        '    <PackageReference Include="Serilog.Sinks.EventLog" Version="3.1.0" />',
        "  </ItemGroup>",
        "</Project>",
    ])
    worker = "src/Worker/Worker.cs"
    s.file(worker, [
        "namespace Worker;",
        "",
        "public sealed class NotificationWorker : BackgroundService",
        "{",
        *filler("cs", "inbox", 5),
        "        await SendAsync(message, stoppingToken);",
        *filler("cs", "outbox", 4),
        "}",
    ])
    s.file("scripts/start.sh", ["#!/bin/sh", "set -e", "exec dotnet Worker.dll"])
    s.file("docs/operations.md", ["# Operations", "", "Restart the worker after config changes."])
    s.file("README.md", ["# Notification worker", "", "Sends email and SMS notifications."])
    settings = "src/Worker/appsettings.json"
    s.file(settings, ["{", '  "BatchSize": 50,', *filler("json", "Worker", 3), "}"])

    s.commit("Drop the Windows agent installer").delete(install, [PATH, JAEGER])
    s.commit("Resolve the jaeger agent through the host IP").edit(
        k8s, ["            - name: JAEGER_AGENT_HOST", "              value: localhost"],
        ["            - name: JAEGER_AGENT_HOST", "              valueFrom:", "                fieldRef:",
         "                  fieldPath: status.hostIP"], [JAEGER])
    s.commit("Run jaeger as a sidecar container").insert(
        k8s, "          image: contoso.azurecr.io/notification-worker:3.2",
        ["        - name: jaeger-agent", "          image: jaegertracing/jaeger-agent:1.52"], [JAEGER])
    s.commit("Inject the istio proxy").insert(
        k8s, '        prometheus.io/port: "9102"', ['        sidecar.istio.io/inject: "true"'], [SIDECAR])
    s.commit("Default the agent host to the node").edit(
        settings_cs,
        ['    public static string AgentHost => Environment.GetEnvironmentVariable("JAEGER_AGENT_HOST") ?? "localhost";'],
        ['    public static string AgentHost => Environment.GetEnvironmentVariable("JAEGER_AGENT_HOST") ?? "127.0.0.1";'],
        [])
    s.commit("Containerize the worker").add("Dockerfile", [
        "FROM mcr.microsoft.com/dotnet/runtime:8.0",
        "WORKDIR /app",
        "COPY publish/ .",
        'ENTRYPOINT ["dotnet", "Worker.dll"]',
    ], [DOCKER])
    s.commit("Trap signals in the start script").insert(
        "scripts/start.sh", "set -e", ["trap 'exit 0' TERM"], [])
    s.commit("Log to the console sink").edit(
        proj, ['    <PackageReference Include="Serilog.Sinks.EventLog" Version="3.1.0" />'],
        ['    <PackageReference Include="Serilog.Sinks.Console" Version="5.0.1" />'], [LOGGING])
    s.commit("Pass cancellation to the sender").edit(
        worker, ["        await SendAsync(message, stoppingToken);"],
        ["        await SendAsync(message, stoppingToken).ConfigureAwait(false);"], [])
    s.commit("Describe the notification channels").edit(
        "README.md", ["Sends email and SMS notifications."], ["Sends email, SMS and push notifications."], [])
    s.commit("Rename the operations guide").rename("docs/operations.md", "docs/runbook.md").edit(
        "scripts/start.sh", ["exec dotnet Worker.dll"], ["exec dotnet Worker.dll --urls http://0.0.0.0:8080"], [])
    s.commit("Raise the batch size").edit(settings, ['  "BatchSize": 50,'], ['  "BatchSize": 200,'], [])
    s.commit("Scale the worker out").edit(k8s, ["  replicas: 1"], ["  replicas: 3"], [])
    return s


# ---------------------------------------------------------------- report-scheduler

def scheduler():
    s = Service("report-scheduler")
    sched = "scripts/schedule.cmd"
    s.file(sched, [
        "@echo off",
        "set REPORT_DIR=C:\\reports\\out",
        *filler("cmd", "collect", 7),
        "xcopy C:\\reports\\templates\\*.xlsx %REPORT_DIR% /Y",
        *filler("cmd", "publish", 3),
    ])
    cleanup = "scripts/cleanup.ps1"
    s.file(cleanup, [
        "$days = 7",
        *filler("ps1", "scan", 7),
        "Remove-Item C:\\reports\\tmp\\* -Recurse",
        *filler("ps1", "done", 7),
        'Write-EventLog -LogName Application -Source Reports -EventId 1 -Message "Cleaned C:\\reports\\tmp"',
    ])
    proj = "src/Scheduler/Scheduler.csproj"
    s.file(proj, [
        '<Project Sdk="Microsoft.NET.Sdk">',
        "  <ItemGroup>",
        '    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />',
        '    <PackageReference Include="Quartz" Version="3.8.0" />',
        "  </ItemGroup>",
        *filler("csproj", "Jobs", 7),
        "  <ItemGroup>",
        '    <PackageReference Include="Serilog" Version="3.1.1" />',
        "  </ItemGroup>",
        "</Project>",
    ])
    chart = "src/Scheduler/ChartExporter.cs"
    s.file(chart, [
        "using System.Drawing;",
        "using System.Drawing.Imaging;",
        "",
        "namespace Scheduler;",
        "",
        "public sealed class ChartExporter",
        "{",
        "    private static readonly string[] Palette = { \"#1f77b4\", \"#ff7f0e\" };",
        *filler("cs", "axis", 7),
        "    public void Export(string path, int width, int height)",
        "    {",
        "        using var bmp = new System.Drawing.Bitmap(width, height);",
        "        bmp.Save(path, System.Drawing.Imaging.ImageFormat.Png);",
        "    }",
        "}",
    ])
    k8s = "deploy/k8s/scheduler.yaml"
    s.file(k8s, [
        "apiVersion: batch/v1",
        "kind: CronJob",
        "metadata:",
        "  name: report-scheduler",
        "spec:",
        '  schedule: "0 2 * * *"',
        "  jobTemplate:",
        "    spec:",
        "      template:",
        "        metadata:",
        "          annotations:",
        '            team: "reporting"',
        *filler("yaml", "cronTail", 3),
    ])
    s.file("Dockerfile", [
        "FROM mcr.microsoft.com/dotnet/runtime:8.0",
        "WORKDIR /app",
        "COPY publish/ .",
        *filler("docker", "fonts", 4),
        "RUN echo placeholder-for-fonts",
        *filler("docker", "cleanup", 4),
        'ENTRYPOINT ["Scheduler.exe"]',
    ])
    program = "src/Scheduler/Program.cs"
    s.file(program, [
        "var builder = Host.CreateApplicationBuilder(args);",
        *filler("cs", "jobs", 4),
        "builder.Services.AddQuartz();",
        *filler("cs", "run", 4),
        "builder.Build().Run();",
    ])
    s.file("README.md", [
        "# Report scheduler",
        "",
        "Builds nightly spreadsheets.",
        *filler("md", "schedule", 6),
        "Contact the reporting team for access.",
    ], noeol=True)

    s.commit("Port the schedule script to sh").rename(sched, "scripts/schedule.sh").edit(
        sched, ["@echo off", "set REPORT_DIR=C:\\reports\\out"], ["#!/bin/sh", "REPORT_DIR=/var/reports/out"],
        [PATH]).edit(
        sched, ["xcopy C:\\reports\\templates\\*.xlsx %REPORT_DIR% /Y"],
        ['cp /var/reports/templates/*.xlsx "$REPORT_DIR"'], [PATH])
    s.commit("Clean temporary reports under /var").edit(
        cleanup, ["Remove-Item C:\\reports\\tmp\\* -Recurse"], ["Remove-Item /var/reports/tmp/* -Recurse"], [PATH])
    s.commit("Keep temporary reports for two weeks").edit(cleanup, ["$days = 7"], ["$days = 14"], [])
    s.commit("Replace System.Drawing.Common with SkiaSharp").edit(
        proj, ['    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />'],
        ['    <PackageReference Include="SkiaSharp" Version="2.88.7" />'], [DRAWING])
    s.commit("Draw charts with SkiaSharp").edit(
        chart, ["using System.Drawing;", "using System.Drawing.Imaging;"], ["using SkiaSharp;"], [DRAWING]).edit(
        chart, ["        using var bmp = new System.Drawing.Bitmap(width, height);",
                "        bmp.Save(path, System.Drawing.Imaging.ImageFormat.Png);"],
        ["        using var surface = SkiaSharp.SKSurface.Create(new SKImageInfo(width, height));",
         "        File.WriteAllBytes(path, surface.Snapshot().Encode().ToArray());"], [DRAWING])
    s.commit("Add the console sink").insert(
        proj, '    <PackageReference Include="Serilog" Version="3.1.1" />',
        ['    <PackageReference Include="Serilog.Sinks.Console" Version="5.0.1" />'], [], after=[LOGGING])
    s.commit("Enable dapr for the scheduler job").insert(
        k8s, '            team: "reporting"', ['            dapr.io/enabled: "true"', '            dapr.io/app-id: reports'],
        [SIDECAR])
    s.commit("Start the scheduler through dotnet").edit(
        "Dockerfile", ['ENTRYPOINT ["Scheduler.exe"]'], ['ENTRYPOINT ["dotnet", "Scheduler.dll"]'], [DOCKER])
    s.commit("Install chart fonts").edit(
        "Dockerfile", ["RUN echo placeholder-for-fonts"],
        ["RUN apt-get update && apt-get install -y --no-install-recommends fonts-dejavu-core"], [])
    s.commit("Register the export job").edit(
        program, ["builder.Services.AddQuartz();"],
        ["builder.Services.AddQuartz(q => q.AddJob<ExportJob>(j => j.WithIdentity(\"export\")));"], [])
    s.commit("Use the corporate palette").edit(
        chart, ['    private static readonly string[] Palette = { "#1f77b4", "#ff7f0e" };'],
        ['    private static readonly string[] Palette = { "#0b3d91", "#fc3d21" };'], [])
    s.commit("Update the report template").binary("assets/template.xlsx")
    s.commit("Report cleanup results to syslog").edit(
        cleanup, ['Write-EventLog -LogName Application -Source Reports -EventId 1 -Message "Cleaned C:\\reports\\tmp"'],
        ['logger -t reports "Cleaned /var/reports/tmp"'], [PATH, LOGGING], after=[PATH])
    s.commit("Document the schedule").insert(
        "README.md", "Note 5 about schedule.", ["Reports run at 02:00 UTC."], [])
    return s


KB_DOCS = {
    "path-separators.kb.md": """---
id: path-separators
title: Convert Windows paths in scripts to POSIX paths
file_globs: ["**/*.ps1", "**/*.cmd", "**/*.sh"]
positive_examples:
  - Set-Location C:\\svc\\bin
negative_examples:
  - cd /svc/bin
  - echo done
---
Scripts that ran on Windows hosts hard-code drive letters and backslash
separators. On Linux hosts every such path has to become a forward-slash
path under the service root.

## Pattern Descriptions
- Windows drive names
- Backslash path separators
""",
    "system-drawing-migration.kb.md": """---
id: system-drawing-migration
title: Replace System.Drawing with a cross-platform imaging library
file_globs: ["**/*.cs", "**/*.csproj"]
keywords: [System.Drawing]
positive_examples: ["using SixLabors.ImageSharp;", "using SkiaSharp;"]
negative_examples: ["using System.IO;"]
---
System.Drawing.Common only works on Windows. Replace its package reference
and every usage with ImageSharp or SkiaSharp.

## Pattern Descriptions
- Cross-platform imaging library references
""",
    "logging-deps.kb.md": """---
id: logging-deps
title: Update logging dependencies for the target operating system
file_globs:
  - "**/*.csproj"
  - "**/*.cs"
  - "**/*.json"
  - "**/*.ps1"
keywords: [EventLog, Serilog.Sinks.Syslog]
---
The Windows event log is not available on Linux. Services must stop writing
to it and log to syslog or the console instead.
""",
    "jaeger-deployment.kb.md": """---
id: jaeger-deployment
title: Deploy the jaeger agent as a container
file_globs: ["**/*.yaml", "**/*.yml", "**/*.ps1"]
keywords: [JAEGER_AGENT_HOST]
positive_examples: ["          image: jaegertracing/jaeger-agent:1.52"]
negative_examples: ["          image: nginx:1.25"]
---
On Windows the jaeger agent runs as a Windows service. On Linux and
Kubernetes it runs as a container next to the service, and clients find it
through JAEGER_AGENT_HOST.

## Pattern Descriptions
- Jaeger agent container deployment
""",
    "dockerfile-additions.kb.md": """---
id: dockerfile-additions
title: Add or update Dockerfiles for Linux deployment
file_globs: ["**/Dockerfile"]
keywords: [ENTRYPOINT]
positive_examples: ["FROM mcr.microsoft.com/dotnet/aspnet:8.0"]
negative_examples: ["RUN dotnet publish -c Release"]
---
The platform deploys every service as a Linux container. Each service needs
a Dockerfile with a Linux base image and an entrypoint that starts it with
dotnet.

## Pattern Descriptions
- Container base image lines
""",
    "k8s-sidecars.kb.md": """---
id: k8s-sidecars
title: Adopt the recommended sidecar frameworks in Kubernetes manifests
file_globs: ["**/deploy/**/*.yaml"]
keywords: ["dapr.io/enabled", "sidecar.istio.io/inject"]
---
Kubernetes manifests must opt in to the sidecar frameworks recommended by the
platform team, either the dapr runtime or the istio proxy.
""",
}


def agent_patch():
    """A partial attempt at the image-resizer migration, rendered against the pre-migration tree."""
    svc = resizer()
    c = Commit("agent attempt", "")
    c.edit("src/ImageResizer/ImageResizer.csproj",
           ['    <PackageReference Include="System.Drawing.Common" Version="6.0.0" />'],
           ['    <PackageReference Include="SkiaSharp" Version="2.88.8" />'], [])
    c.edit("scripts/run.ps1", ['$root = "C:\\resizer"'], ['$root = "/srv/resizer"'], [])
    c.edit("Dockerfile", ["FROM mcr.microsoft.com/dotnet/framework/runtime:4.8-windowsservercore-ltsc2019"],
           ["FROM ubuntu:22.04"], [])
    c.insert("deploy/helm/values.yaml", "  tag: 2.3.0",
             ["sidecars:", "  - image: jaegertracing/jaeger-agent:1.52"], [])
    patch = build_patch(svc, 0, c, "0" * 40, [])
    return patch[patch.index("diff --git"):patch.index("-- \n")]


# Worked by hand from the agent patch above and the image-resizer truth (25 edits):
# 8 predicted edits; 5 pair up (SkiaSharp line at distance 1/56, run.ps1 root at
# 3/22, and three exact deletions). Attempted KBs: system-drawing-migration,
# path-separators, dockerfile-additions, jaeger-deployment. The first three are
# validated; jaeger-deployment is not required.
AGENT_TABLE = """KB                        required attempted validated
dockerfile-additions      yes      yes       yes
jaeger-deployment         no       yes       no
k8s-sidecars              yes      no        no
logging-deps              yes      no        no
path-separators           yes      yes       yes
system-drawing-migration  yes      yes       yes

line precision  0.625
line recall     0.200
line F1         0.303
KB precision    0.750
KB recall       0.600
edits           5 matched / 8 predicted / 25 truth (tau 0.2)
"""


def main():
    if ROOT.exists():
        for sub in ("kbs", "services", "expected", "agents"):
            shutil.rmtree(ROOT / sub, ignore_errors=True)
    (ROOT / "kbs").mkdir(parents=True, exist_ok=True)
    for name, text in KB_DOCS.items():
        (ROOT / "kbs" / name).write_text(text)

    config = {"kb_root": "kbs", "services": [], "synth": {"backend": "rulebook"}, "tau": 0.2, "context": 3,
              "evidence_detail": "all"}
    labels = {"services": {}}
    for svc in (billing(), resizer(), notifier(), scheduler()):
        out = ROOT / "services" / svc.sid
        out.mkdir(parents=True)
        pre_ref = commit_id(svc.sid, 0)
        # History before the migration window; not part of the listed commits.
        (out / f"0001-{pre_ref}.patch").write_text(
            f"From {pre_ref} Mon Sep 17 00:00:00 2001\nFrom: Dana Reyes <dana.reyes@example.com>\n"
            f"Subject: [PATCH] Initial import\n\n---\ndiff --git a/.gitignore b/.gitignore\nnew file mode 100644\n"
            f"--- /dev/null\n+++ b/.gitignore\n@@ -0,0 +1,2 @@\n+bin/\n+obj/\n")
        hunks = []
        commits = []
        for k, c in enumerate(svc.commits, start=1):
            cid = commit_id(svc.sid, k)
            commits.append(cid)
            (out / f"{k + 1:04d}-{cid}.patch").write_text(build_patch(svc, k, c, cid, hunks))
        config["services"].append({"service_id": svc.sid, "source": f"services/{svc.sid}", "mode": "patch_dir",
                                   "pre_ref": pre_ref, "migration_commits": commits})
        labels["services"][svc.sid] = {"pre_ref": pre_ref, "commits": commits, "hunks": hunks}

    (ROOT / "migbench.json").write_text(json.dumps(config, indent=2) + "\n")
    (ROOT / "expected").mkdir()
    (ROOT / "expected" / "labels.json").write_text(json.dumps(labels, indent=2, sort_keys=True) + "\n")
    (ROOT / "expected" / "kb_edit.json").write_text(json.dumps(EDIT, indent=2) + "\n")

    # Expected suite delta after the keyword edit.
    def index(field):
        out = {}
        for sid, data in labels["services"].items():
            for h in data["hunks"]:
                for kb in h[field]:
                    out.setdefault((sid, kb), set()).add(h["hunk_id"])
        return out

    before, after = index("kbs"), index("kbs_after_edit")
    lines = []
    for key in sorted(set(after) - set(before)):
        lines.append(f"added   {key[0]}/{key[1]}")
    for key in sorted(set(before) - set(after)):
        lines.append(f"removed {key[0]}/{key[1]}")
    for key in sorted(set(before) & set(after)):
        plus = sorted(after[key] - before[key])
        minus = sorted(before[key] - after[key])
        if plus or minus:
            lines.append(f"changed {key[0]}/{key[1]} (+{len(plus)} -{len(minus)} hunks)")
            lines += [f"  + {h}" for h in plus] + [f"  - {h}" for h in minus]
    (ROOT / "expected" / "delta_after_edit.txt").write_text("\n".join(lines) + "\n" if lines else "no changes\n")
    (ROOT / "agents").mkdir(exist_ok=True)
    (ROOT / "agents" / "image-resizer-partial.diff").write_text(agent_patch())
    (ROOT / "expected" / "image-resizer-partial.txt").write_text(AGENT_TABLE)
    total = sum(len(d["commits"]) for d in labels["services"].values())
    print(f"{total} commits, {sum(len(d['hunks']) for d in labels['services'].values())} hunks")


if __name__ == "__main__":
    main()
