#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "mtsp/matching.hpp"

namespace mtsp {

namespace {

// Edmonds' blossom algorithm for maximum-weight matching, following the structure of
// Galil's O(n^3) formulation. Dual variables are stored doubled so integer weights
// keep all arithmetic integral. Endpoints are encoded as p = 2k or 2k+1 for edge k.
class Blossom {
public:
    Blossom(int n, const std::vector<std::tuple<int, int, std::int64_t>>& edges, bool maxcard)
        : n_(n), edges_(edges), maxcard_(maxcard) {
        const int m = static_cast<int>(edges.size());
        std::int64_t maxw = 0;
        for (auto& [i, j, w] : edges) {
            if (i < 0 || j < 0 || i >= n || j >= n || i == j)
                throw std::invalid_argument("max_weight_matching: bad edge");
            maxw = std::max(maxw, w);
        }
        endpoint_.resize(2 * m);
        neighbend_.assign(n, {});
        for (int k = 0; k < m; ++k) {
            auto [i, j, w] = edges[k];
            endpoint_[2 * k] = i;
            endpoint_[2 * k + 1] = j;
            neighbend_[i].push_back(2 * k + 1);
            neighbend_[j].push_back(2 * k);
        }
        mate_.assign(n, -1);
        label_.assign(2 * n, 0);
        labelend_.assign(2 * n, -1);
        inblossom_.resize(n);
        for (int v = 0; v < n; ++v) inblossom_[v] = v;
        parent_.assign(2 * n, -1);
        childs_.assign(2 * n, {});
        base_.assign(2 * n, -1);
        for (int v = 0; v < n; ++v) base_[v] = v;
        endps_.assign(2 * n, {});
        bestedge_.assign(2 * n, -1);
        bestedges_.assign(2 * n, {});
        has_bestedges_.assign(2 * n, 0);
        for (int b = 2 * n - 1; b >= n; --b) unused_.push_back(b);
        dual_.assign(2 * n, 0);
        for (int v = 0; v < n; ++v) dual_[v] = maxw;
        allow_.assign(m, 0);
    }

    std::vector<int> solve() {
        for (int stage = 0; stage < n_; ++stage) {
            std::fill(label_.begin(), label_.end(), 0);
            std::fill(bestedge_.begin(), bestedge_.end(), -1);
            for (int b = n_; b < 2 * n_; ++b) {
                bestedges_[b].clear();
                has_bestedges_[b] = 0;
            }
            std::fill(allow_.begin(), allow_.end(), 0);
            queue_.clear();
            for (int v = 0; v < n_; ++v)
                if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
            bool augmented = false;
            while (true) {
                while (!queue_.empty() && !augmented) {
                    int v = queue_.back();
                    queue_.pop_back();
                    for (int p : neighbend_[v]) {
                        int k = p / 2;
                        int w = endpoint_[p];
                        if (inblossom_[v] == inblossom_[w]) continue;
                        std::int64_t kslack = 0;
                        if (!allow_[k]) {
                            kslack = slack(k);
                            if (kslack <= 0) allow_[k] = 1;
                        }
                        if (allow_[k]) {
                            if (label_[inblossom_[w]] == 0) {
                                assign_label(w, 2, p ^ 1);
                            } else if (label_[inblossom_[w]] == 1) {
                                int base = scan_blossom(v, w);
                                if (base >= 0) {
                                    add_blossom(base, k);
                                } else {
                                    augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if (label_[w] == 0) {
                                label_[w] = 2;
                                labelend_[w] = p ^ 1;
                            }
                        } else if (label_[inblossom_[w]] == 1) {
                            int b = inblossom_[v];
                            if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
                        } else if (label_[w] == 0) {
                            if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
                        }
                    }
                }
                if (augmented) break;

                int deltatype = -1, deltaedge = -1, deltablossom = -1;
                std::int64_t delta = 0;
                if (!maxcard_) {
                    deltatype = 1;
                    delta = *std::min_element(dual_.begin(), dual_.begin() + n_);
                }
                for (int v = 0; v < n_; ++v) {
                    if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
                        std::int64_t d = slack(bestedge_[v]);
                        if (deltatype == -1 || d < delta) {
                            delta = d;
                            deltatype = 2;
                            deltaedge = bestedge_[v];
                        }
                    }
                }
                for (int b = 0; b < 2 * n_; ++b) {
                    if (parent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
                        std::int64_t d = slack(bestedge_[b]) / 2;
                        if (deltatype == -1 || d < delta) {
                            delta = d;
                            deltatype = 3;
                            deltaedge = bestedge_[b];
                        }
                    }
                }
                for (int b = n_; b < 2 * n_; ++b) {
                    if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 && (deltatype == -1 || dual_[b] < delta)) {
                        delta = dual_[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if (deltatype == -1) {
                    deltatype = 1;
                    delta = std::max<std::int64_t>(0, *std::min_element(dual_.begin(), dual_.begin() + n_));
                }
                for (int v = 0; v < n_; ++v) {
                    if (label_[inblossom_[v]] == 1)
                        dual_[v] -= delta;
                    else if (label_[inblossom_[v]] == 2)
                        dual_[v] += delta;
                }
                for (int b = n_; b < 2 * n_; ++b) {
                    if (base_[b] >= 0 && parent_[b] == -1) {
                        if (label_[b] == 1)
                            dual_[b] += delta;
                        else if (label_[b] == 2)
                            dual_[b] -= delta;
                    }
                }
                if (deltatype == 1) break;
                if (deltatype == 2) {
                    allow_[deltaedge] = 1;
                    auto [i, j, w] = edges_[deltaedge];
                    if (label_[inblossom_[i]] == 0) std::swap(i, j);
                    queue_.push_back(i);
                } else if (deltatype == 3) {
                    allow_[deltaedge] = 1;
                    queue_.push_back(std::get<0>(edges_[deltaedge]));
                } else {
                    expand_blossom(deltablossom, false);
                }
            }
            if (!augmented) break;
            for (int b = n_; b < 2 * n_; ++b)
                if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) expand_blossom(b, true);
        }
        std::vector<int> out(n_, -1);
        for (int v = 0; v < n_; ++v)
            if (mate_[v] >= 0) out[v] = endpoint_[mate_[v]];
        return out;
    }

private:
    std::int64_t slack(int k) const {
        auto& [i, j, w] = edges_[k];
        return dual_[i] + dual_[j] - 2 * w;
    }

    void leaves(int b, std::vector<int>& out) const {
        if (b < n_) {
            out.push_back(b);
            return;
        }
        for (int t : childs_[b]) leaves(t, out);
    }
    std::vector<int> leaves(int b) const {
        std::vector<int> out;
        leaves(b, out);
        return out;
    }

    void assign_label(int w, int t, int p) {
        int b = inblossom_[w];
        label_[w] = label_[b] = t;
        labelend_[w] = labelend_[b] = p;
        bestedge_[w] = bestedge_[b] = -1;
        if (t == 1) {
            leaves(b, queue_);
        } else if (t == 2) {
            int base = base_[b];
            assign_label(endpoint_[mate_[base]], 1, mate_[base] ^ 1);
        }
    }

    int scan_blossom(int v, int w) {
        std::vector<int> path;
        int base = -1;
        while (v != -1 || w != -1) {
            int b = inblossom_[v];
            if (label_[b] & 4) {
                base = base_[b];
                break;
            }
            path.push_back(b);
            label_[b] = 5;
            if (labelend_[b] == -1) {
                v = -1;
            } else {
                v = endpoint_[labelend_[b]];
                b = inblossom_[v];
                v = endpoint_[labelend_[b]];
            }
            if (w != -1) std::swap(v, w);
        }
        for (int b : path) label_[b] = 1;
        return base;
    }

    void add_blossom(int base, int k) {
        auto [v, w, wt] = edges_[k];
        int bb = inblossom_[base];
        int bv = inblossom_[v];
        int bw = inblossom_[w];
        int b = unused_.back();
        unused_.pop_back();
        base_[b] = base;
        parent_[b] = -1;
        parent_[bb] = b;
        auto& path = childs_[b];
        auto& endps = endps_[b];
        path.clear();
        endps.clear();
        while (bv != bb) {
            parent_[bv] = b;
            path.push_back(bv);
            endps.push_back(labelend_[bv]);
            v = endpoint_[labelend_[bv]];
            bv = inblossom_[v];
        }
        path.push_back(bb);
        std::reverse(path.begin(), path.end());
        std::reverse(endps.begin(), endps.end());
        endps.push_back(2 * k);
        while (bw != bb) {
            parent_[bw] = b;
            path.push_back(bw);
            endps.push_back(labelend_[bw] ^ 1);
            w = endpoint_[labelend_[bw]];
            bw = inblossom_[w];
        }
        label_[b] = 1;
        labelend_[b] = labelend_[bb];
        dual_[b] = 0;
        for (int u : leaves(b)) {
            if (label_[inblossom_[u]] == 2) queue_.push_back(u);
            inblossom_[u] = b;
        }
        std::vector<int> bestedgeto(2 * n_, -1);
        for (int c : path) {
            std::vector<std::vector<int>> lists;
            if (!has_bestedges_[c]) {
                for (int u : leaves(c)) {
                    std::vector<int> l;
                    for (int p : neighbend_[u]) l.push_back(p / 2);
                    lists.push_back(std::move(l));
                }
            } else {
                lists.push_back(bestedges_[c]);
            }
            for (auto& l : lists) {
                for (int e : l) {
                    auto [i, j, ww] = edges_[e];
                    if (inblossom_[j] == b) std::swap(i, j);
                    int bj = inblossom_[j];
                    if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(e) < slack(bestedgeto[bj])))
                        bestedgeto[bj] = e;
                }
            }
            bestedges_[c].clear();
            has_bestedges_[c] = 0;
            bestedge_[c] = -1;
        }
        bestedges_[b].clear();
        for (int e : bestedgeto)
            if (e != -1) bestedges_[b].push_back(e);
        has_bestedges_[b] = 1;
        bestedge_[b] = -1;
        for (int e : bestedges_[b])
            if (bestedge_[b] == -1 || slack(e) < slack(bestedge_[b])) bestedge_[b] = e;
    }

    void expand_blossom(int b, bool endstage) {
        for (int s : childs_[b]) {
            parent_[s] = -1;
            if (s < n_) {
                inblossom_[s] = s;
            } else if (endstage && dual_[s] == 0) {
                expand_blossom(s, endstage);
            } else {
                for (int v : leaves(s)) inblossom_[v] = s;
            }
        }
        if (!endstage && label_[b] == 2) {
            const auto& ch = childs_[b];
            const auto& ep = endps_[b];
            const int len = static_cast<int>(ch.size());
            auto at = [len](int j) { return ((j % len) + len) % len; };
            int entrychild = inblossom_[endpoint_[labelend_[b] ^ 1]];
            int j = static_cast<int>(std::find(ch.begin(), ch.end(), entrychild) - ch.begin());
            int jstep, endptrick;
            if (j & 1) {
                j -= len;
                jstep = 1;
                endptrick = 0;
            } else {
                jstep = -1;
                endptrick = 1;
            }
            int p = labelend_[b];
            while (j != 0) {
                label_[endpoint_[p ^ 1]] = 0;
                label_[endpoint_[ep[at(j - endptrick)] ^ endptrick ^ 1]] = 0;
                assign_label(endpoint_[p ^ 1], 2, p);
                allow_[ep[at(j - endptrick)] / 2] = 1;
                j += jstep;
                p = ep[at(j - endptrick)] ^ endptrick;
                allow_[p / 2] = 1;
                j += jstep;
            }
            int bv = ch[at(j)];
            label_[endpoint_[p ^ 1]] = label_[bv] = 2;
            labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
            bestedge_[bv] = -1;
            j += jstep;
            while (ch[at(j)] != entrychild) {
                bv = ch[at(j)];
                if (label_[bv] == 1) {
                    j += jstep;
                    continue;
                }
                int found = -1;
                for (int v : leaves(bv)) {
                    if (label_[v] != 0) {
                        found = v;
                        break;
                    }
                }
                if (found >= 0) {
                    label_[found] = 0;
                    label_[endpoint_[mate_[base_[bv]]]] = 0;
                    assign_label(found, 2, labelend_[found]);
                }
                j += jstep;
            }
        }
        label_[b] = labelend_[b] = -1;
        childs_[b].clear();
        endps_[b].clear();
        base_[b] = -1;
        bestedges_[b].clear();
        has_bestedges_[b] = 0;
        bestedge_[b] = -1;
        unused_.push_back(b);
    }

    void augment_blossom(int b, int v) {
        int t = v;
        while (parent_[t] != b) t = parent_[t];
        if (t >= n_) augment_blossom(t, v);
        auto& ch = childs_[b];
        auto& ep = endps_[b];
        const int len = static_cast<int>(ch.size());
        auto at = [len](int j) { return ((j % len) + len) % len; };
        int i = static_cast<int>(std::find(ch.begin(), ch.end(), t) - ch.begin());
        int j = i;
        int jstep, endptrick;
        if (i & 1) {
            j -= len;
            jstep = 1;
            endptrick = 0;
        } else {
            jstep = -1;
            endptrick = 1;
        }
        while (j != 0) {
            j += jstep;
            t = ch[at(j)];
            int p = ep[at(j - endptrick)] ^ endptrick;
            if (t >= n_) augment_blossom(t, endpoint_[p]);
            j += jstep;
            t = ch[at(j)];
            if (t >= n_) augment_blossom(t, endpoint_[p ^ 1]);
            mate_[endpoint_[p]] = p ^ 1;
            mate_[endpoint_[p ^ 1]] = p;
        }
        std::rotate(ch.begin(), ch.begin() + i, ch.end());
        std::rotate(ep.begin(), ep.begin() + i, ep.end());
        base_[b] = base_[ch[0]];
    }

    void augment_matching(int k) {
        auto [v, w, wt] = edges_[k];
        for (auto [s, p] : {std::pair<int, int>{v, 2 * k + 1}, std::pair<int, int>{w, 2 * k}}) {
            while (true) {
                int bs = inblossom_[s];
                if (bs >= n_) augment_blossom(bs, s);
                mate_[s] = p;
                if (labelend_[bs] == -1) break;
                int t = endpoint_[labelend_[bs]];
                int bt = inblossom_[t];
                s = endpoint_[labelend_[bt]];
                int j = endpoint_[labelend_[bt] ^ 1];
                if (bt >= n_) augment_blossom(bt, j);
                mate_[j] = labelend_[bt];
                p = labelend_[bt] ^ 1;
            }
        }
    }

    int n_;
    std::vector<std::tuple<int, int, std::int64_t>> edges_;
    bool maxcard_;
    std::vector<int> endpoint_;
    std::vector<std::vector<int>> neighbend_;
    std::vector<int> mate_, label_, labelend_, inblossom_, parent_, base_, bestedge_, unused_, queue_;
    std::vector<std::vector<int>> childs_, endps_, bestedges_;
    std::vector<char> has_bestedges_, allow_;
    std::vector<std::int64_t> dual_;
};

}  // namespace

std::vector<int> max_weight_matching(int n, const std::vector<std::tuple<int, int, std::int64_t>>& edges,
                                     bool max_cardinality) {
    if (n == 0 || edges.empty()) return std::vector<int>(n, -1);
    return Blossom(n, edges, max_cardinality).solve();
}

}  // namespace mtsp
