#include "mtsp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace mtsp {

double tour_cost(const MetricInstance& inst, const std::vector<int>& order) {
    double s = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i)
        s += inst(order[i], order[(i + 1) % order.size()]);
    return s;
}

bool is_permutation(const std::vector<int>& order, int n) {
    if (static_cast<int>(order.size()) != n) return false;
    std::vector<char> seen(n, 0);
    for (int v : order) {
        if (v < 0 || v >= n || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

Tour make_tour(const MetricInstance& inst, std::vector<int> order) {
    if (!is_permutation(order, inst.n)) throw std::invalid_argument("tour is not a permutation");
    Tour t;
    t.cost = tour_cost(inst, order);
    t.order = std::move(order);
    return t;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

long nint(double x) { return static_cast<long>(x + 0.5); }

double geo_rad(double v) {
    constexpr double kPi = 3.141592;
    double deg = static_cast<int>(v);
    double min = v - deg;
    return kPi * (deg + 5.0 * min / 3.0) / 180.0;
}

struct Token {
    std::string text;
    int line;
};

}  // namespace

double max_triangle_violation(const Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows());
    double worst = 0.0;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            for (int w = 0; w < n; ++w)
                worst = std::max(worst, c(u, w) - c(u, v) - c(v, w));
    return worst;
}

void metric_completion(Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows());
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                c(i, j) = std::min(c(i, j), c(i, k) + c(k, j));
}

MetricInstance load_tsplib(std::istream& in) {
    MetricInstance inst;
    std::map<std::string, std::string> spec;
    std::string section;
    std::vector<Token> data;
    std::string line;
    int lineno = 0;
    int section_line = 0;
    std::vector<std::pair<std::string, std::vector<Token>>> sections;

    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::string u = upper(t);
        if (u == "EOF") break;
        auto colon = t.find(':');
        bool is_section = u.find("_SECTION") != std::string::npos && colon == std::string::npos;
        if (colon != std::string::npos && section.empty()) {
            spec[upper(trim(t.substr(0, colon)))] = trim(t.substr(colon + 1));
            continue;
        }
        if (is_section) {
            if (!section.empty()) sections.emplace_back(section, std::move(data));
            section = u;
            section_line = lineno;
            data.clear();
            continue;
        }
        if (section.empty()) throw ParseError("line " + std::to_string(lineno) + ": unexpected content '" + t + "'");
        if (colon != std::string::npos) {
            sections.emplace_back(section, std::move(data));
            section.clear();
            data.clear();
            spec[upper(trim(t.substr(0, colon)))] = trim(t.substr(colon + 1));
            continue;
        }
        std::istringstream ss(t);
        std::string tok;
        while (ss >> tok) data.push_back({tok, lineno});
    }
    (void)section_line;
    if (!section.empty()) sections.emplace_back(section, std::move(data));

    if (spec.count("NAME")) inst.name = spec["NAME"];
    if (spec.count("TYPE") && upper(spec["TYPE"]) != "TSP")
        throw ParseError("TYPE: unsupported problem type '" + spec["TYPE"] + "'");
    if (!spec.count("DIMENSION")) throw ParseError("DIMENSION: missing");
    try {
        inst.n = std::stoi(spec["DIMENSION"]);
    } catch (...) {
        throw ParseError("DIMENSION: not an integer");
    }
    if (inst.n < 1) throw ParseError("DIMENSION: must be positive");
    const int n = inst.n;
    std::string type = spec.count("EDGE_WEIGHT_TYPE") ? upper(spec["EDGE_WEIGHT_TYPE"]) : "";
    if (type != "EUC_2D" && type != "GEO" && type != "EXPLICIT")
        throw ParseError("EDGE_WEIGHT_TYPE: unsupported value '" + type + "'");
    inst.cost = Eigen::MatrixXd::Zero(n, n);

    auto find_section = [&](const std::string& name) -> const std::vector<Token>* {
        for (auto& s : sections)
            if (s.first == name) return &s.second;
        return nullptr;
    };
    auto number = [](const Token& t) {
        try {
            std::size_t pos = 0;
            double v = std::stod(t.text, &pos);
            if (pos != t.text.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ParseError("line " + std::to_string(t.line) + ": malformed number '" + t.text + "'");
        }
    };

    if (type == "EXPLICIT") {
        std::string fmt = spec.count("EDGE_WEIGHT_FORMAT") ? upper(spec["EDGE_WEIGHT_FORMAT"]) : "";
        if (fmt != "FULL_MATRIX" && fmt != "LOWER_DIAG_ROW")
            throw ParseError("EDGE_WEIGHT_FORMAT: unsupported value '" + fmt + "'");
        auto* w = find_section("EDGE_WEIGHT_SECTION");
        if (!w) throw ParseError("EDGE_WEIGHT_SECTION: missing");
        std::size_t need = fmt == "FULL_MATRIX" ? static_cast<std::size_t>(n) * n
                                                : static_cast<std::size_t>(n) * (n + 1) / 2;
        if (w->size() != need) {
            int at = w->empty() ? lineno : w->back().line;
            throw ParseError("line " + std::to_string(at) + ": EDGE_WEIGHT_SECTION has " +
                             std::to_string(w->size()) + " entries, expected " + std::to_string(need));
        }
        std::size_t k = 0;
        if (fmt == "FULL_MATRIX") {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) inst.cost(i, j) = number((*w)[k++]);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < i; ++j)
                    if (inst.cost(i, j) != inst.cost(j, i))
                        throw ParseError("EDGE_WEIGHT_SECTION: asymmetric entry (" + std::to_string(i + 1) + "," +
                                         std::to_string(j + 1) + ")");
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j <= i; ++j) {
                    double v = number((*w)[k++]);
                    inst.cost(i, j) = inst.cost(j, i) = v;
                }
        }
        for (int i = 0; i < n; ++i) {
            if (inst.cost(i, i) != 0.0) {
                inst.warnings.push_back("nonzero diagonal at node " + std::to_string(i + 1) + " ignored");
                inst.cost(i, i) = 0.0;
            }
            for (int j = 0; j < n; ++j)
                if (inst.cost(i, j) < 0)
                    throw ParseError("EDGE_WEIGHT_SECTION: negative weight at (" + std::to_string(i + 1) + "," +
                                     std::to_string(j + 1) + ")");
        }
        double viol = max_triangle_violation(inst.cost);
        if (viol > 1e-9)
            throw ParseError("EDGE_WEIGHT_SECTION: triangle inequality violated by " + std::to_string(viol));
        if (viol > 0) {
            metric_completion(inst.cost);
            inst.warnings.push_back("triangle inequality repaired by metric completion");
        }
        return inst;
    }

    auto* c = find_section("NODE_COORD_SECTION");
    if (!c) throw ParseError("NODE_COORD_SECTION: missing");
    if (c->size() != static_cast<std::size_t>(3 * n)) {
        int at = c->empty() ? lineno : c->back().line;
        throw ParseError("line " + std::to_string(at) + ": NODE_COORD_SECTION has " + std::to_string(c->size()) +
                         " tokens, expected " + std::to_string(3 * n));
    }
    std::vector<double> xs(n), ys(n);
    std::vector<char> seen(n, 0);
    for (int i = 0; i < n; ++i) {
        const Token& idt = (*c)[3 * i];
        double id = number(idt);
        int k = static_cast<int>(id) - 1;
        if (k < 0 || k >= n || seen[k] || id != std::floor(id))
            throw ParseError("line " + std::to_string(idt.line) + ": bad node index '" + idt.text + "'");
        seen[k] = 1;
        xs[k] = number((*c)[3 * i + 1]);
        ys[k] = number((*c)[3 * i + 2]);
    }
    if (type == "EUC_2D") {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) inst.cost(i, j) = static_cast<double>(nint(std::hypot(xs[i] - xs[j], ys[i] - ys[j])));
    } else {
        constexpr double kRadius = 6378.388;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double lat_i = geo_rad(xs[i]), lon_i = geo_rad(ys[i]);
                double lat_j = geo_rad(xs[j]), lon_j = geo_rad(ys[j]);
                double q1 = std::cos(lon_i - lon_j);
                double q2 = std::cos(lat_i - lat_j);
                double q3 = std::cos(lat_i + lat_j);
                inst.cost(i, j) = static_cast<double>(
                    static_cast<long>(kRadius * std::acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0));
            }
    }
    // Rounding can break the triangle inequality by up to one unit; TSPLIB costs are kept as published.
    double viol = max_triangle_violation(inst.cost);
    if (viol > 0)
        inst.warnings.push_back("rounded costs violate the triangle inequality by up to " + std::to_string(viol));
    return inst;
}

MetricInstance load_tsplib_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    auto inst = load_tsplib(f);
    if (inst.name.empty()) inst.name = path;
    return inst;
}

void write_tsplib(std::ostream& out, const MetricInstance& inst) {
    out << "NAME: " << (inst.name.empty() ? "instance" : inst.name) << "\n";
    out << "TYPE: TSP\n";
    out << "DIMENSION: " << inst.n << "\n";
    out << "EDGE_WEIGHT_TYPE: EXPLICIT\n";
    out << "EDGE_WEIGHT_FORMAT: FULL_MATRIX\n";
    out << "EDGE_WEIGHT_SECTION\n";
    out.precision(17);
    for (int i = 0; i < inst.n; ++i) {
        for (int j = 0; j < inst.n; ++j) out << (j ? " " : "") << inst.cost(i, j);
        out << "\n";
    }
    out << "EOF\n";
}

void write_tour(std::ostream& out, const Tour& t, const std::string& name) {
    out << "NAME: " << name << "\n";
    out << "TYPE: TOUR\n";
    out << "DIMENSION: " << t.order.size() << "\n";
    out << "TOUR_SECTION\n";
    for (int v : t.order) out << v + 1 << "\n";
    out << "-1\nEOF\n";
}

std::vector<int> read_tour(std::istream& in) {
    std::string line;
    bool inside = false;
    std::vector<int> order;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = upper(trim(line));
        if (t.empty()) continue;
        if (!inside) {
            if (t == "TOUR_SECTION") inside = true;
            continue;
        }
        std::istringstream ss(t);
        long v;
        while (ss >> v) {
            if (v == -1) return order;
            if (v < 1) throw ParseError("line " + std::to_string(lineno) + ": bad tour node");
            order.push_back(static_cast<int>(v - 1));
        }
        if (!ss.eof()) throw ParseError("line " + std::to_string(lineno) + ": malformed TOUR_SECTION entry");
    }
    if (!inside) throw ParseError("TOUR_SECTION: missing");
    return order;
}

MetricInstance random_euclidean(int n, std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("random_euclidean: n must be at least 3");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = u(rng);
        ys[i] = u(rng);
    }
    MetricInstance inst;
    inst.n = n;
    inst.name = "random" + std::to_string(n) + "_s" + std::to_string(seed);
    inst.cost = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) inst.cost(i, j) = inst.cost(j, i) = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
    return inst;
}

OptResult exact_opt(const MetricInstance& inst) {
    const int n = inst.n;
    if (n > 16) throw std::length_error("exact_opt: n = " + std::to_string(n) + " exceeds the limit of 16");
    if (n <= 3) {
        std::vector<int> o(n);
        for (int i = 0; i < n; ++i) o[i] = i;
        auto t = make_tour(inst, o);
        return {t.cost, t};
    }
    // Vertex n-1 is the fixed start; subsets range over the other m vertices.
    const int m = n - 1;
    const std::size_t full = std::size_t{1} << m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(full * m, inf);
    std::vector<std::int8_t> prev(full * m, -1);
    for (int j = 0; j < m; ++j) dp[(std::size_t{1} << j) * m + j] = inst(m, j);
    for (std::size_t s = 1; s < full; ++s)
        for (int j = 0; j < m; ++j) {
            double v = dp[s * m + j];
            if (v == inf) continue;
            for (int k = 0; k < m; ++k) {
                if (s >> k & 1) continue;
                std::size_t t = s | (std::size_t{1} << k);
                double w = v + inst(j, k);
                if (w < dp[t * m + k]) {
                    dp[t * m + k] = w;
                    prev[t * m + k] = static_cast<std::int8_t>(j);
                }
            }
        }
    double best = inf;
    int last = -1;
    for (int j = 0; j < m; ++j) {
        double w = dp[(full - 1) * m + j] + inst(j, m);
        if (w < best) {
            best = w;
            last = j;
        }
    }
    std::vector<int> order;
    std::size_t s = full - 1;
    int j = last;
    while (j >= 0) {
        order.push_back(j);
        int p = prev[s * m + j];
        s &= ~(std::size_t{1} << j);
        j = p;
    }
    order.push_back(m);
    std::reverse(order.begin(), order.end());
    auto t = make_tour(inst, order);
    return {t.cost, t};
}

Tour two_opt(const MetricInstance& inst, Tour t) {
    const int n = static_cast<int>(t.order.size());
    auto& o = t.order;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i = 0; i < n - 1; ++i)
            for (int j = i + 2; j < n; ++j) {
                int a = o[i], b = o[i + 1], c = o[j], d = o[(j + 1) % n];
                if (a == d) continue;
                double delta = inst(a, c) + inst(b, d) - inst(a, b) - inst(c, d);
                if (delta < -1e-10) {
                    std::reverse(o.begin() + i + 1, o.begin() + j + 1);
                    improved = true;
                }
            }
    }
    t.cost = tour_cost(inst, o);
    return t;
}

}  // namespace mtsp
