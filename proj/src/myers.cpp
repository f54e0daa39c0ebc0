#include "migbench/diff.hpp"

#include <algorithm>
#include <unordered_map>

namespace migbench {

namespace {

// Linear-space Myers over interned line ids: recursively split at the point
// where the forward and reverse furthest-reaching paths overlap.
class Myers {
public:
    Myers(std::vector<int> a, std::vector<int> b) : a_(std::move(a)), b_(std::move(b)) {}

    std::vector<EditKind> run() {
        diff(0, a_.size(), 0, b_.size());
        return std::move(ops_);
    }

private:
    void emit(EditKind k, std::size_t n) { ops_.insert(ops_.end(), n, k); }

    void diff(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
        std::size_t prefix = 0;
        while (a0 + prefix < a1 && b0 + prefix < b1 && a_[a0 + prefix] == b_[b0 + prefix]) ++prefix;
        emit(EditKind::Keep, prefix);
        a0 += prefix;
        b0 += prefix;
        std::size_t suffix = 0;
        while (a1 - suffix > a0 && b1 - suffix > b0 && a_[a1 - suffix - 1] == b_[b1 - suffix - 1]) ++suffix;
        a1 -= suffix;
        b1 -= suffix;

        if (a0 == a1) {
            emit(EditKind::Insert, b1 - b0);
        } else if (b0 == b1) {
            emit(EditKind::Delete, a1 - a0);
        } else {
            bisect(a0, a1, b0, b1);
        }
        emit(EditKind::Keep, suffix);
    }

    void bisect(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
        const auto n = static_cast<long>(a1 - a0);
        const auto m = static_cast<long>(b1 - b0);
        const long max_d = (n + m + 1) / 2;
        const long v_offset = max_d;
        const long v_length = 2 * max_d + 2;
        std::vector<long> v1(static_cast<std::size_t>(v_length), -1);
        std::vector<long> v2(static_cast<std::size_t>(v_length), -1);
        v1[static_cast<std::size_t>(v_offset + 1)] = 0;
        v2[static_cast<std::size_t>(v_offset + 1)] = 0;
        const long delta = n - m;
        const bool front = (delta % 2) != 0;
        long k1start = 0, k1end = 0, k2start = 0, k2end = 0;
        auto A = [&](long i) { return a_[a0 + static_cast<std::size_t>(i)]; };
        auto B = [&](long j) { return b_[b0 + static_cast<std::size_t>(j)]; };
        auto at = [](std::vector<long>& v, long k) -> long& { return v[static_cast<std::size_t>(k)]; };

        for (long d = 0; d < max_d; ++d) {
            for (long k1 = -d + k1start; k1 <= d - k1end; k1 += 2) {
                const long k1_offset = v_offset + k1;
                long x1 = (k1 == -d || (k1 != d && at(v1, k1_offset - 1) < at(v1, k1_offset + 1)))
                              ? at(v1, k1_offset + 1)
                              : at(v1, k1_offset - 1) + 1;
                long y1 = x1 - k1;
                while (x1 < n && y1 < m && A(x1) == B(y1)) {
                    ++x1;
                    ++y1;
                }
                at(v1, k1_offset) = x1;
                if (x1 > n) {
                    k1end += 2;
                } else if (y1 > m) {
                    k1start += 2;
                } else if (front) {
                    const long k2_offset = v_offset + delta - k1;
                    if (k2_offset >= 0 && k2_offset < v_length && at(v2, k2_offset) != -1) {
                        const long x2 = n - at(v2, k2_offset);
                        if (x1 >= x2) return split(a0, a1, b0, b1, x1, y1);
                    }
                }
            }
            for (long k2 = -d + k2start; k2 <= d - k2end; k2 += 2) {
                const long k2_offset = v_offset + k2;
                long x2 = (k2 == -d || (k2 != d && at(v2, k2_offset - 1) < at(v2, k2_offset + 1)))
                              ? at(v2, k2_offset + 1)
                              : at(v2, k2_offset - 1) + 1;
                long y2 = x2 - k2;
                while (x2 < n && y2 < m && A(n - x2 - 1) == B(m - y2 - 1)) {
                    ++x2;
                    ++y2;
                }
                at(v2, k2_offset) = x2;
                if (x2 > n) {
                    k2end += 2;
                } else if (y2 > m) {
                    k2start += 2;
                } else if (!front) {
                    const long k1_offset = v_offset + delta - k2;
                    if (k1_offset >= 0 && k1_offset < v_length && at(v1, k1_offset) != -1) {
                        const long x1 = at(v1, k1_offset);
                        const long y1 = v_offset + x1 - k1_offset;
                        if (x1 >= n - x2) return split(a0, a1, b0, b1, x1, y1);
                    }
                }
            }
        }
        emit(EditKind::Delete, a1 - a0);
        emit(EditKind::Insert, b1 - b0);
    }

    void split(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1, long x, long y) {
        const auto ax = a0 + static_cast<std::size_t>(x);
        const auto by = b0 + static_cast<std::size_t>(y);
        diff(a0, ax, b0, by);
        diff(ax, a1, by, b1);
    }

    std::vector<int> a_;
    std::vector<int> b_;
    std::vector<EditKind> ops_;
};

// Within each run of changes, moves deletions ahead of insertions.
void normalize(std::vector<EditKind>& ops) {
    std::size_t i = 0;
    while (i < ops.size()) {
        if (ops[i] == EditKind::Keep) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::size_t dels = 0;
        while (j < ops.size() && ops[j] != EditKind::Keep) {
            if (ops[j] == EditKind::Delete) ++dels;
            ++j;
        }
        std::fill(ops.begin() + static_cast<std::ptrdiff_t>(i), ops.begin() + static_cast<std::ptrdiff_t>(i + dels),
                  EditKind::Delete);
        std::fill(ops.begin() + static_cast<std::ptrdiff_t>(i + dels), ops.begin() + static_cast<std::ptrdiff_t>(j),
                  EditKind::Insert);
        i = j;
    }
}

}  // namespace

std::vector<EditKind> shortest_edit_script(std::span<const std::string> old_lines,
                                           std::span<const std::string> new_lines) {
    std::unordered_map<std::string_view, int> ids;
    auto intern = [&](std::span<const std::string> lines) {
        std::vector<int> out;
        out.reserve(lines.size());
        for (const auto& l : lines) out.push_back(ids.try_emplace(l, static_cast<int>(ids.size())).first->second);
        return out;
    };
    auto a = intern(old_lines);
    auto b = intern(new_lines);
    auto ops = Myers(std::move(a), std::move(b)).run();
    normalize(ops);
    return ops;
}

std::vector<Hunk> compute_file_diff(std::span<const std::string> old_lines, std::span<const std::string> new_lines,
                                    std::size_t context, std::string_view old_path, std::string_view new_path) {
    const auto ops = shortest_edit_script(old_lines, new_lines);
    // Old/new line counts consumed before each op.
    std::vector<std::size_t> old_before(ops.size() + 1, 0), new_before(ops.size() + 1, 0);
    for (std::size_t k = 0; k < ops.size(); ++k) {
        old_before[k + 1] = old_before[k] + (ops[k] != EditKind::Insert ? 1 : 0);
        new_before[k + 1] = new_before[k] + (ops[k] != EditKind::Delete ? 1 : 0);
    }

    // Change blocks as [begin, end) op ranges.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t k = 0; k < ops.size();) {
        if (ops[k] == EditKind::Keep) {
            ++k;
            continue;
        }
        const std::size_t begin = k;
        while (k < ops.size() && ops[k] != EditKind::Keep) ++k;
        blocks.emplace_back(begin, k);
    }

    std::vector<Hunk> hunks;
    std::size_t b = 0;
    while (b < blocks.size()) {
        std::size_t last = b;
        while (last + 1 < blocks.size() && blocks[last + 1].first - blocks[last].second <= 2 * context) ++last;
        const std::size_t begin = blocks[b].first >= context ? blocks[b].first - context : 0;
        const std::size_t end = std::min(ops.size(), blocks[last].second + context);

        Hunk h;
        h.file_old = std::string(old_path);
        h.file_new = std::string(new_path);
        h.old_len = old_before[end] - old_before[begin];
        h.new_len = new_before[end] - new_before[begin];
        h.old_start = old_before[begin] + (h.old_len > 0 ? 1 : 0);
        h.new_start = new_before[begin] + (h.new_len > 0 ? 1 : 0);
        for (std::size_t k = begin; k < end; ++k) {
            switch (ops[k]) {
                case EditKind::Keep: h.lines.push_back({LineKind::Context, old_lines[old_before[k]]}); break;
                case EditKind::Delete: h.lines.push_back({LineKind::Del, old_lines[old_before[k]]}); break;
                case EditKind::Insert: h.lines.push_back({LineKind::Add, new_lines[new_before[k]]}); break;
            }
        }
        h.hunk_id = compute_hunk_id(h);
        hunks.push_back(std::move(h));
        b = last + 1;
    }
    return hunks;
}

}  // namespace migbench
