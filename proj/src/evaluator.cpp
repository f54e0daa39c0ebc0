#include "migbench/evaluator.hpp"

#include "migbench/error.hpp"
#include "migbench/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace migbench {

using nlohmann::json;

namespace {

// Distance if <= bound, otherwise bound + 1. Only the diagonal band of width
// `bound` can hold a value within the bound.
std::size_t bounded_levenshtein(const std::vector<char32_t>& a, const std::vector<char32_t>& b, std::size_t bound) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const std::size_t diff = n > m ? n - m : m - n;
    if (diff > bound) return bound + 1;
    const std::size_t inf = bound + 1;
    std::vector<std::size_t> prev(m + 1, inf), cur(m + 1, inf);
    for (std::size_t j = 0; j <= std::min(m, bound); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t lo = i > bound ? i - bound : 0;
        const std::size_t hi = std::min(m, i + bound);
        std::fill(cur.begin(), cur.end(), inf);
        if (lo == 0) cur[0] = i;
        std::size_t row_min = cur[0];
        for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            const std::size_t del = prev[j] + 1;
            const std::size_t ins = cur[j - 1] + 1;
            cur[j] = std::min({sub, del, ins, inf});
            row_min = std::min(row_min, cur[j]);
        }
        if (row_min > bound) return inf;
        std::swap(prev, cur);
    }
    return std::min(prev[m], inf);
}

std::string fmt(const std::optional<double>& v) {
    if (!v) return "\xE2\x80\x93";  // en dash: metric absent
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << *v;
    return out.str();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json edit_json(const LineEdit& e) {
    return {{"file", e.file}, {"op", e.op == EditOp::Add ? "ADD" : "DEL"}, {"content", e.content}, {"anchor", e.anchor}};
}

// Min-cost maximum bipartite matching by successive shortest paths.
class AssignmentSolver {
public:
    struct Edge {
        std::size_t to;
        long long cap;
        long long cost;
        std::size_t rev;
    };

    explicit AssignmentSolver(std::size_t nodes) : graph_(nodes) {}

    void add_edge(std::size_t from, std::size_t to, long long cost) {
        graph_[from].push_back({to, 1, cost, graph_[to].size()});
        graph_[to].push_back({from, 0, -cost, graph_[from].size() - 1});
    }

    void solve(std::size_t source, std::size_t sink) {
        const std::size_t n = graph_.size();
        constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
        std::vector<long long> potential(n, 0);
        std::vector<long long> dist(n);
        std::vector<std::size_t> prev_node(n), prev_edge(n);
        while (true) {
            std::fill(dist.begin(), dist.end(), kInf);
            dist[source] = 0;
            using Item = std::pair<long long, std::size_t>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
            queue.emplace(0, source);
            while (!queue.empty()) {
                const auto [d, u] = queue.top();
                queue.pop();
                if (d > dist[u]) continue;
                for (std::size_t k = 0; k < graph_[u].size(); ++k) {
                    const Edge& e = graph_[u][k];
                    if (e.cap <= 0) continue;
                    const long long nd = d + e.cost + potential[u] - potential[e.to];
                    if (nd < dist[e.to]) {
                        dist[e.to] = nd;
                        prev_node[e.to] = u;
                        prev_edge[e.to] = k;
                        queue.emplace(nd, e.to);
                    }
                }
            }
            if (dist[sink] >= kInf) break;
            for (std::size_t v = 0; v < n; ++v) {
                if (dist[v] < kInf) potential[v] += dist[v];
            }
            for (std::size_t v = sink; v != source; v = prev_node[v]) {
                Edge& e = graph_[prev_node[v]][prev_edge[v]];
                e.cap -= 1;
                graph_[v][e.rev].cap += 1;
            }
        }
    }

    /// Saturated forward edge out of `from`, if any.
    std::optional<std::size_t> matched_to(std::size_t from, std::size_t lo, std::size_t hi) const {
        for (const auto& e : graph_[from]) {
            if (e.to >= lo && e.to < hi && e.cap == 0 && e.cost >= 0) return e.to;
        }
        return std::nullopt;
    }

private:
    std::vector<std::vector<Edge>> graph_;
};

constexpr double kCostScale = 1e9;

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
    const auto ca = text::code_points(a);
    const auto cb = text::code_points(b);
    return bounded_levenshtein(ca, cb, std::max(ca.size(), cb.size()));
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
    const auto ca = text::code_points(a);
    const auto cb = text::code_points(b);
    const std::size_t m = std::max(ca.size(), cb.size());
    if (m == 0) return 0.0;
    return static_cast<double>(bounded_levenshtein(ca, cb, m)) / static_cast<double>(m);
}

EditMatching match_edits(std::span<const LineEdit> predicted, std::span<const LineEdit> truth, double tau) {
    EditMatching result;
    auto order = [](std::span<const LineEdit> edits) {
        std::vector<std::size_t> idx(edits.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
            const auto& a = edits[x];
            const auto& b = edits[y];
            return std::tie(a.file, a.op, a.anchor, a.content) < std::tie(b.file, b.op, b.anchor, b.content);
        });
        return idx;
    };
    const auto p_order = order(predicted);
    const auto t_order = order(truth);

    // Independent groups by (file, op).
    auto group_end = [](std::span<const LineEdit> edits, const std::vector<std::size_t>& idx, std::size_t from) {
        std::size_t k = from;
        while (k < idx.size() && edits[idx[k]].file == edits[idx[from]].file && edits[idx[k]].op == edits[idx[from]].op) ++k;
        return k;
    };
    std::vector<bool> p_used(predicted.size(), false), t_used(truth.size(), false);
    std::size_t pi = 0;
    std::size_t ti = 0;
    while (pi < p_order.size() && ti < t_order.size()) {
        const auto& pe = predicted[p_order[pi]];
        const auto& te = truth[t_order[ti]];
        if (std::tie(pe.file, pe.op) < std::tie(te.file, te.op)) {
            pi = group_end(predicted, p_order, pi);
            continue;
        }
        if (std::tie(te.file, te.op) < std::tie(pe.file, pe.op)) {
            ti = group_end(truth, t_order, ti);
            continue;
        }
        const std::size_t p_end = group_end(predicted, p_order, pi);
        const std::size_t t_end = group_end(truth, t_order, ti);
        const std::size_t np = p_end - pi;
        const std::size_t nt = t_end - ti;

        std::vector<std::vector<char32_t>> p_cp, t_cp;
        for (std::size_t k = pi; k < p_end; ++k) p_cp.push_back(text::code_points(predicted[p_order[k]].content));
        for (std::size_t k = ti; k < t_end; ++k) t_cp.push_back(text::code_points(truth[t_order[k]].content));

        // Nodes: 0 source, 1..np predicted, np+1..np+nt truth, np+nt+1 sink.
        const std::size_t source = 0;
        const std::size_t sink = np + nt + 1;
        AssignmentSolver solver(np + nt + 2);
        std::map<std::pair<std::size_t, std::size_t>, double> distance;
        for (std::size_t a = 0; a < np; ++a) {
            solver.add_edge(source, 1 + a, 0);
            for (std::size_t b = 0; b < nt; ++b) {
                const std::size_t longest = std::max(p_cp[a].size(), t_cp[b].size());
                const auto bound = static_cast<std::size_t>(std::floor(tau * static_cast<double>(longest) + 1e-9));
                const std::size_t d = longest == 0 ? 0 : bounded_levenshtein(p_cp[a], t_cp[b], bound);
                if (d > bound) continue;
                const double norm = longest == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(longest);
                if (norm > tau + 1e-12) continue;
                distance[{a, b}] = norm;
                solver.add_edge(1 + a, 1 + np + b, std::llround(norm * kCostScale));
            }
        }
        for (std::size_t b = 0; b < nt; ++b) solver.add_edge(1 + np + b, sink, 0);
        solver.solve(source, sink);
        for (std::size_t a = 0; a < np; ++a) {
            if (auto to = solver.matched_to(1 + a, 1 + np, 1 + np + nt)) {
                const std::size_t b = *to - 1 - np;
                const std::size_t p_idx = p_order[pi + a];
                const std::size_t t_idx = t_order[ti + b];
                result.pairs.push_back({p_idx, t_idx, distance.at({a, b})});
                p_used[p_idx] = true;
                t_used[t_idx] = true;
            }
        }
        pi = p_end;
        ti = t_end;
    }
    std::sort(result.pairs.begin(), result.pairs.end(),
              [](const EditPair& x, const EditPair& y) { return x.predicted < y.predicted; });
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        if (!p_used[k]) result.unmatched_predicted.push_back(k);
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (!t_used[k]) result.unmatched_truth.push_back(k);
    }
    return result;
}

double f1(double precision, double recall) {
    if (precision + recall <= 0.0) throw Error(ErrorCode::DomainError, "F1 undefined when precision + recall = 0");
    return 2.0 * precision * recall / (precision + recall);
}

LineMetrics line_metrics(const EditMatching& matching) {
    LineMetrics m;
    const auto pairs = static_cast<double>(matching.pairs.size());
    const std::size_t predicted = matching.pairs.size() + matching.unmatched_predicted.size();
    const std::size_t truth = matching.pairs.size() + matching.unmatched_truth.size();
    if (predicted > 0) m.precision = pairs / static_cast<double>(predicted);
    if (truth > 0) m.recall = pairs / static_cast<double>(truth);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) m.f1 = f1(*m.precision, *m.recall);
    return m;
}

AgentPatch AgentPatch::parse(std::string_view service_id, std::string_view unified_diff) {
    return {std::string(service_id), parse_unified_diff(unified_diff)};
}

std::vector<LineEdit> AgentPatch::line_edits() const {
    std::vector<LineEdit> out;
    for (const auto& fd : diff) {
        if (fd.binary) continue;
        for (const auto& h : fd.hunks) {
            auto edits = extract_line_edits(h);
            out.insert(out.end(), std::make_move_iterator(edits.begin()), std::make_move_iterator(edits.end()));
        }
    }
    return out;
}

EvalReport evaluate(const AgentPatch& patch, const BenchmarkSuite& suite, const KbSet& kbs,
                    const PatternSynthesizer& synth, const EvalOptions& options) {
    if (options.tau < 0.0 || options.tau > 1.0) throw Error(ErrorCode::BadConfig, "tau must lie in [0, 1]");
    const auto instances = suite.instances_for(patch.service_id);
    if (instances.empty()) throw Error(ErrorCode::UnknownService, "no benchmark instance for '" + patch.service_id + "'");

    EvalReport report;
    report.service_id = patch.service_id;
    report.tau = options.tau;

    // Truth edits, each (hunk_id, edit index) once, with the KBs that own it.
    std::map<std::pair<std::string, std::size_t>, std::size_t> seen;
    std::vector<std::set<std::string>> owners;
    for (const auto* inst : instances) {
        report.per_kb[inst->kb_id].required = true;
        for (const auto& h : inst->hunks) {
            const auto edits = extract_line_edits(h);
            for (std::size_t k = 0; k < edits.size(); ++k) {
                auto [it, fresh] = seen.try_emplace({h.hunk_id, k}, report.truth.size());
                if (fresh) {
                    report.truth.push_back(edits[k]);
                    owners.emplace_back();
                }
                owners[it->second].insert(inst->kb_id);
            }
        }
    }

    report.predicted = patch.line_edits();
    report.matching = match_edits(report.predicted, report.truth, options.tau);
    const auto lm = line_metrics(report.matching);
    report.line_precision = lm.precision;
    report.line_recall = lm.recall;
    report.line_f1 = lm.f1;
    if (!lm.precision) report.notes.emplace_back("line precision absent: the patch has no line edits");
    if (!lm.recall) report.notes.emplace_back("line recall absent: the service has no truth edits");
    if (!lm.f1 && lm.precision && lm.recall) report.notes.emplace_back("line F1 absent: precision + recall = 0");
    if (!lm.f1 && !(lm.precision && lm.recall)) report.notes.emplace_back("line F1 absent: a component is absent");

    // Attempted: KBs the matchers assign at least one agent hunk to.
    const std::vector<CommitDiff> agent_commit{{"agent-patch", suite.instances_for(patch.service_id).front()->pre_migration_ref,
                                                "", patch.diff}};
    const auto mapping = map_hunks(patch.service_id, agent_commit, kbs, synth, options.match);
    for (const auto& [kb, hits] : mapping.kb_hit_counts) {
        if (hits > 0) report.per_kb[kb].attempted = true;
    }
    for (const auto& pair : report.matching.pairs) {
        for (const auto& kb : owners[pair.truth]) report.per_kb[kb].validated = true;
    }

    std::size_t required = 0;
    std::size_t attempted = 0;
    std::size_t validated = 0;
    std::size_t validated_attempted = 0;
    for (const auto& [kb, v] : report.per_kb) {
        required += v.required ? 1 : 0;
        attempted += v.attempted ? 1 : 0;
        validated += v.validated ? 1 : 0;
        validated_attempted += (v.validated && v.attempted) ? 1 : 0;
    }
    if (attempted > 0) {
        report.kb_precision = static_cast<double>(validated_attempted) / static_cast<double>(attempted);
    } else {
        report.notes.emplace_back("KB precision absent: no KB attempted");
    }
    report.kb_recall = static_cast<double>(validated) / static_cast<double>(required);
    return report;
}

std::vector<FileDiff> oracle_patch(const BenchmarkSuite& suite, std::string_view service_id) {
    std::vector<FileDiff> files;
    std::set<std::string> seen;
    for (const auto* inst : suite.instances_for(service_id)) {
        for (const auto& h : inst->hunks) {
            if (!seen.insert(h.hunk_id).second) continue;
            auto it = std::find_if(files.begin(), files.end(), [&](const FileDiff& f) {
                return f.old_path == h.file_old && f.new_path == h.file_new;
            });
            if (it == files.end()) {
                FileDiff fd;
                fd.old_path = h.file_old;
                fd.new_path = h.file_new;
                fd.status = h.file_old == h.file_new ? FileStatus::Modified : FileStatus::Renamed;
                files.push_back(std::move(fd));
                it = std::prev(files.end());
            }
            it->hunks.push_back(h);
        }
    }
    for (auto& fd : files) {
        std::stable_sort(fd.hunks.begin(), fd.hunks.end(),
                         [](const Hunk& a, const Hunk& b) { return a.old_start < b.old_start; });
    }
    return files;
}

std::string write_report(const EvalReport& r) {
    json per_kb = json::object();
    for (const auto& [kb, v] : r.per_kb) {
        per_kb[kb] = {{"required", v.required}, {"attempted", v.attempted}, {"validated", v.validated}};
    }
    json pairs = json::array();
    for (const auto& p : r.matching.pairs) {
        pairs.push_back({{"predicted", edit_json(r.predicted[p.predicted])},
                         {"truth", edit_json(r.truth[p.truth])},
                         {"distance", p.distance}});
    }
    json unmatched_predicted = json::array();
    for (const auto k : r.matching.unmatched_predicted) unmatched_predicted.push_back(edit_json(r.predicted[k]));
    json unmatched_truth = json::array();
    for (const auto k : r.matching.unmatched_truth) unmatched_truth.push_back(edit_json(r.truth[k]));

    const json doc = {
        {"service_id", r.service_id},
        {"tau", r.tau},
        {"line", {{"precision", opt_json(r.line_precision)},
                  {"recall", opt_json(r.line_recall)},
                  {"f1", opt_json(r.line_f1)},
                  {"pairs", r.matching.pairs.size()},
                  {"predicted", r.predicted.size()},
                  {"truth", r.truth.size()}}},
        {"kb", {{"precision", opt_json(r.kb_precision)}, {"recall", opt_json(r.kb_recall)}, {"per_kb", per_kb}}},
        {"matching", {{"pairs", pairs}, {"unmatched_predicted", unmatched_predicted}, {"unmatched_truth", unmatched_truth}}},
        {"notes", r.notes}};
    return doc.dump(2) + "\n";
}

std::string render_report_table(const EvalReport& r) {
    std::size_t width = 2;
    for (const auto& [kb, _] : r.per_kb) width = std::max(width, kb.size());
    auto yes_no = [](bool b) { return b ? "yes" : "no"; };
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "KB" << "  " << std::setw(9) << "required"
        << std::setw(10) << "attempted" << "validated\n";
    for (const auto& [kb, v] : r.per_kb) {
        out << std::left << std::setw(static_cast<int>(width)) << kb << "  " << std::setw(9) << yes_no(v.required)
            << std::setw(10) << yes_no(v.attempted) << yes_no(v.validated) << "\n";
    }
    out << "\n";
    out << "line precision  " << fmt(r.line_precision) << "\n";
    out << "line recall     " << fmt(r.line_recall) << "\n";
    out << "line F1         " << fmt(r.line_f1) << "\n";
    out << "KB precision    " << fmt(r.kb_precision) << "\n";
    out << "KB recall       " << fmt(r.kb_recall) << "\n";
    out << "edits           " << r.matching.pairs.size() << " matched / " << r.predicted.size() << " predicted / "
        << r.truth.size() << " truth (tau " << r.tau << ")\n";
    return out.str();
}

}  // namespace migbench
