#include "drnn/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "drnn/errors.hpp"

namespace drnn {

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw NumericError("rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
}

Rational Rational::operator-(const Rational& o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
}

bool Rational::operator<(const Rational& o) const {
    return num * o.den < o.num * den;
}

const char* graph_arch_name(GraphArch k) {
    switch (k) {
        case GraphArch::DilatedRnn: return "dilated_rnn";
        case GraphArch::RegularSkipRnn: return "regular_skip_rnn";
        case GraphArch::DilatedCnn: return "dilated_cnn";
        case GraphArch::ClockworkRnn: return "clockwork_rnn";
        case GraphArch::CustomSchedule: return "custom_schedule";
    }
    return "?";
}

GraphArch graph_arch_from_name(const std::string& name) {
    if (name == "dilated_rnn") return GraphArch::DilatedRnn;
    if (name == "regular_skip_rnn") return GraphArch::RegularSkipRnn;
    if (name == "dilated_cnn") return GraphArch::DilatedCnn;
    if (name == "clockwork_rnn") return GraphArch::ClockworkRnn;
    if (name == "custom_schedule") return GraphArch::CustomSchedule;
    throw ConfigError("unknown architecture '" + name + "'");
}

void ArchSpec::validate_and_fill() {
    if (layers < 1) throw ConfigError("arch spec: need at least one layer");
    switch (kind) {
        case GraphArch::DilatedRnn:
        case GraphArch::DilatedCnn: {
            if (base < 2) throw ConfigError("arch spec: base must be >= 2");
            if (start_exponent < 0) throw ConfigError("arch spec: start exponent must be >= 0");
            dilations.clear();
            int d = 1;
            for (int e = 0; e < start_exponent; ++e) d *= base;
            for (int l = 0; l < layers; ++l) {
                dilations.push_back(d);
                d *= base;
            }
            period = dilations.back();
            break;
        }
        case GraphArch::RegularSkipRnn: {
            if (skip < 1) skip = period;
            if (skip < 1) throw ConfigError("arch spec: regular skip needs a skip length");
            period = skip;
            dilations.clear();
            break;
        }
        case GraphArch::ClockworkRnn: {
            period = 1 << (layers - 1);
            dilations.clear();
            break;
        }
        case GraphArch::CustomSchedule: {
            if (static_cast<int>(dilations.size()) != layers)
                throw ConfigError("arch spec: custom schedule needs one dilation per layer");
            if (dilations.front() != 1)
                throw ConfigError("arch spec: custom schedule must start at dilation 1");
            for (size_t i = 1; i < dilations.size(); ++i) {
                if (dilations[i] < dilations[i - 1] || dilations[i] % dilations[i - 1] != 0)
                    throw ConfigError("arch spec: each dilation must divide the next");
            }
            period = dilations.back();
            break;
        }
    }
}

ArchSpec ArchSpec::dilated(int layers, int base) {
    ArchSpec s;
    s.kind = GraphArch::DilatedRnn;
    s.layers = layers;
    s.base = base;
    s.validate_and_fill();
    return s;
}

ArchSpec ArchSpec::regular_skip(int layers, int skip) {
    ArchSpec s;
    s.kind = GraphArch::RegularSkipRnn;
    s.layers = layers;
    s.skip = skip;
    s.validate_and_fill();
    return s;
}

ArchSpec ArchSpec::dilated_cnn(int layers) {
    ArchSpec s;
    s.kind = GraphArch::DilatedCnn;
    s.layers = layers;
    s.validate_and_fill();
    return s;
}

ArchSpec ArchSpec::clockwork(int groups) {
    ArchSpec s;
    s.kind = GraphArch::ClockworkRnn;
    s.layers = groups;
    s.validate_and_fill();
    return s;
}

ArchSpec ArchSpec::custom(const std::vector<int>& dilations) {
    ArchSpec s;
    s.kind = GraphArch::CustomSchedule;
    s.layers = static_cast<int>(dilations.size());
    s.dilations = dilations;
    s.validate_and_fill();
    return s;
}

// Node 0 is the input; the output is read at the top hidden node, so an
// input-to-output path crosses exactly `layers` edges of layer travel (the
// decomposition d_i(n) = r_i(n) + d).
CyclicGraph build_cyclic_graph(const ArchSpec& spec_in) {
    ArchSpec spec = spec_in;
    spec.validate_and_fill();
    const int d = spec.layers;
    CyclicGraph g;
    g.period = spec.period;
    g.num_nodes = d + 1;
    g.input_node = 0;
    g.hidden_nodes = d;
    switch (spec.kind) {
        case GraphArch::DilatedRnn:
        case GraphArch::CustomSchedule:
            g.output_node = d;
            g.edges.push_back({0, 1, 0, 1});
            for (int l = 1; l < d; ++l) g.edges.push_back({l, l + 1, 0, 1});
            for (int l = 1; l <= d; ++l)
                g.edges.push_back({l, l, spec.dilations[l - 1], 1});
            break;
        case GraphArch::RegularSkipRnn:
            g.output_node = d;
            g.edges.push_back({0, 1, 0, 1});
            for (int l = 1; l < d; ++l) g.edges.push_back({l, l + 1, 0, 1});
            for (int l = 1; l <= d; ++l) {
                g.edges.push_back({l, l, 1, 1});
                g.edges.push_back({l, l, spec.skip, 1});
            }
            break;
        case GraphArch::DilatedCnn:
            g.output_node = d;
            for (int l = 1; l <= d; ++l) {
                g.edges.push_back({l - 1, l, 0, 1});
                g.edges.push_back({l - 1, l, spec.dilations[l - 1], 1});
            }
            break;
        case GraphArch::ClockworkRnn: {
            // group g updates at times t = 0 mod 2^(g-1). Unlike the layered
            // stacks, the groups feed a separate output projection that reads
            // every group, so paths pay one extra layer edge on the way out.
            g.num_nodes = d + 2;
            g.output_node = d + 1;
            g.time_gated = true;
            for (int grp = 1; grp <= d; ++grp) {
                const int prd = 1 << (grp - 1);
                g.edges.push_back({0, grp, 0, prd});
                g.edges.push_back({grp, grp, prd, prd});
                for (int faster = 1; faster < grp; ++faster)
                    g.edges.push_back({grp, faster, 0, prd});
                g.edges.push_back({grp, d + 1, 0, prd});
            }
            break;
        }
    }
    return g;
}

std::vector<int> shortest_paths_from(const CyclicGraph& g, int i, int horizon) {
    if (horizon < 0) throw ConfigError("shortest_paths_from: negative horizon");
    const int nodes = g.num_nodes;
    const auto idx = [nodes](int t, int p) { return t * nodes + p; };
    std::vector<int> dist(static_cast<std::size_t>(horizon + 1) * nodes, kUnreachable);
    std::deque<std::pair<int, int>> queue;
    dist[idx(0, g.input_node)] = 0;
    queue.emplace_back(0, g.input_node);
    while (!queue.empty()) {
        const auto [t, p] = queue.front();
        queue.pop_front();
        const int dcur = dist[idx(t, p)];
        for (const GraphEdge& e : g.edges) {
            if (e.from != p) continue;
            const int t2 = t + e.offset;
            if (t2 > horizon) continue;
            if (e.gate > 1 && (i + t2) % e.gate != 0) continue;
            auto& slot = dist[idx(t2, e.to)];
            if (slot == kUnreachable) {
                slot = dcur + 1;
                queue.emplace_back(t2, e.to);
            }
        }
    }
    std::vector<int> result(horizon + 1, kUnreachable);
    for (int n = 0; n <= horizon; ++n) result[n] = dist[idx(n, g.output_node)];
    return result;
}

int shortest_path_oracle(const CyclicGraph& g, int i, int n) {
    if (n < 0) throw ConfigError("shortest_path_oracle: span must be >= 0");
    return shortest_paths_from(g, i, n)[n];
}

PathTable compute_path_table(const CyclicGraph& g, int horizon) {
    PathTable table;
    table.horizon = horizon;
    table.max_over_i.assign(horizon, kUnreachable);
    if (!g.time_gated) {
        // edges are active at every time, so d_i(n) does not depend on i
        const auto d0 = shortest_paths_from(g, 0, horizon);
        for (int n = 1; n <= horizon; ++n) table.max_over_i[n - 1] = d0[n];
        return table;
    }
    std::vector<std::vector<int>> per_i(g.period);
    for (int i = 0; i < g.period; ++i) per_i[i] = shortest_paths_from(g, i, horizon);
    for (int n = 1; n <= horizon; ++n) {
        int worst = 0;
        bool unreachable = false;
        for (int i = 0; i < g.period; ++i) {
            const int v = per_i[i][n];
            if (v == kUnreachable) unreachable = true;
            worst = std::max(worst, v);
            if (v != per_i[0][n]) table.i_dependent = true;
        }
        table.max_over_i[n - 1] = unreachable ? kUnreachable : worst;
    }
    return table;
}

int digit_path_length(long long n, const std::vector<int>& dilations) {
    if (n < 1) throw ConfigError("digit_path_length: span must be >= 1");
    if (dilations.empty()) throw ConfigError("digit_path_length: empty schedule");
    long long rem = n;
    long long count = 0;
    for (auto it = dilations.rbegin(); it != dilations.rend(); ++it) {
        count += rem / *it;
        rem %= *it;
    }
    if (rem != 0) return kUnreachable;
    return static_cast<int>(count) + static_cast<int>(dilations.size());
}

std::optional<Rational> mean_recurrent_length_oracle(const CyclicGraph& g) {
    const PathTable table = compute_path_table(g, g.period);
    long long sum = 0;
    for (int v : table.max_over_i) {
        if (v == kUnreachable) return std::nullopt;
        sum += v;
    }
    return Rational(sum, g.period);
}

namespace {

int exact_log2(long long m) {
    int k = 0;
    long long v = 1;
    while (v < m) {
        v *= 2;
        ++k;
    }
    if (v != m) throw ConfigError("closed form requires a power-of-two period");
    return k;
}

}  // namespace

Rational mean_recurrent_length_closed_form(const ArchSpec& spec_in) {
    ArchSpec spec = spec_in;
    spec.validate_and_fill();
    const long long m = spec.period;
    const int log2m = exact_log2(m);
    switch (spec.kind) {
        case GraphArch::RegularSkipRnn:
            // (m-1)/2 + log2 m + 1/m + 1
            return Rational(m - 1, 2) + Rational(log2m) + Rational(1, m) + Rational(1);
        case GraphArch::DilatedRnn:
            if (spec.base != 2)
                throw ConfigError("closed form for dilated RNN requires base 2");
            // (3m-1)/(2m) * log2 m + 1/m + 1
            return Rational((3 * m - 1) * log2m, 2 * m) + Rational(1, m) + Rational(1);
        default:
            throw ConfigError("no closed form for this architecture");
    }
}

NrReport recurrent_edges_per_node(const CyclicGraph& g) {
    long long recurrent = 0;
    for (const GraphEdge& e : g.edges)
        if (e.offset != 0) ++recurrent;
    NrReport r;
    r.literal = Rational(recurrent, g.num_nodes);
    r.per_hidden_layer = Rational(recurrent, g.hidden_nodes);
    return r;
}

std::optional<int> receptive_field(const CyclicGraph& g) {
    const int probe = 2 * g.period + 2;
    const auto d0 = shortest_paths_from(g, 0, probe);
    int max_reachable = kUnreachable;
    for (int n = probe; n >= 0; --n) {
        if (d0[n] != kUnreachable) {
            max_reachable = n;
            break;
        }
    }
    if (max_reachable == probe) return std::nullopt;  // unbounded (recurrent)
    return max_reachable + 1;
}

namespace {

void extend_schedules(std::vector<int>& prefix, int d, int m,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(prefix.size()) == d) {
        if (prefix.back() == m) out.push_back(prefix);
        return;
    }
    const int prev = prefix.back();
    for (int next = prev; next <= m; next += prev) {
        if (next % prev != 0 || m % next != 0) continue;
        prefix.push_back(next);
        extend_schedules(prefix, d, m, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<std::vector<int>> enumerate_schedules(int d, int m) {
    if (d < 1 || m < 1) throw ConfigError("enumerate_schedules: d and m must be positive");
    std::vector<std::vector<int>> out;
    if (d == 1) {
        if (m == 1) out.push_back({1});
        return out;
    }
    std::vector<int> prefix{1};
    extend_schedules(prefix, d, m, out);
    return out;
}

OptimalityReport verify_optimality(int d, int M) {
    if (d < 1 || M < 2) throw ConfigError("verify_optimality: need d >= 1 and M >= 2");
    long long m = 1;
    for (int e = 0; e < d - 1; ++e) m *= M;
    if (m > 4096) throw ConfigError("verify_optimality: period too large for exhaustive search");

    OptimalityReport report;
    report.d = d;
    report.base = M;
    report.period = static_cast<int>(m);
    for (int e = 0, v = 1; e < d; ++e, v *= M) report.geometric.push_back(v);

    for (const auto& schedule : enumerate_schedules(d, static_cast<int>(m))) {
        const CyclicGraph g = build_cyclic_graph(ArchSpec::custom(schedule));
        const auto mean = mean_recurrent_length_oracle(g);
        if (!mean) throw NumericError("verify_optimality: unreachable span in schedule");
        long long ratio_sum = 0;
        for (size_t i = 1; i < schedule.size(); ++i)
            ratio_sum += schedule[i] / schedule[i - 1];
        report.ranking.push_back({schedule, *mean, Rational(ratio_sum - d + 1, 2)});
    }
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [](const ScheduleResult& a, const ScheduleResult& b) {
                         return a.mean_length < b.mean_length;
                     });
    report.geometric_is_strict_min = true;
    for (const auto& r : report.ranking) {
        if (r.dilations == report.geometric) continue;
        const auto geo = std::find_if(report.ranking.begin(), report.ranking.end(),
                                      [&](const ScheduleResult& s) {
                                          return s.dilations == report.geometric;
                                      });
        if (!(geo->mean_length < r.mean_length)) report.geometric_is_strict_min = false;
    }
    return report;
}

ClockworkReport clockwork_capacity_report(int d) {
    if (d < 1 || d > 12) throw ConfigError("clockwork report: d must be in [1, 12]");
    ClockworkReport rep;
    rep.d = d;
    rep.period = 1 << (d - 1);
    const CyclicGraph dilated = build_cyclic_graph(ArchSpec::dilated(d, 2));
    const CyclicGraph clockwork = build_cyclic_graph(ArchSpec::clockwork(d));
    const PathTable td = compute_path_table(dilated, rep.period);
    const PathTable tc = compute_path_table(clockwork, rep.period);
    rep.dilated_max = td.max_over_i;
    rep.clockwork_max = tc.max_over_i;
    rep.clockwork_i_dependent = tc.i_dependent;
    long long sd = 0, sc = 0;
    for (int v : td.max_over_i) sd += v;
    for (int v : tc.max_over_i) sc += v;
    rep.dilated_mean = Rational(sd, rep.period);
    rep.clockwork_mean = Rational(sc, rep.period);
    rep.clockwork_ge_dilated = rep.dilated_mean <= rep.clockwork_mean;
    return rep;
}

}  // namespace drnn
