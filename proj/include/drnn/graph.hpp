#pragma once

#include <optional>
#include <string>
#include <vector>

namespace drnn {

// Exact rational, normalized, non-negative denominator.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1);

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
};

enum class GraphArch {
    DilatedRnn,
    RegularSkipRnn,
    DilatedCnn,
    ClockworkRnn,
    CustomSchedule,
};

const char* graph_arch_name(GraphArch k);
GraphArch graph_arch_from_name(const std::string& name);

// Declarative architecture description for graph analysis. period equals the
// largest dilation (the cyclic-graph period); custom schedules must satisfy
// s_1 = 1, s_d = period, s_i | s_{i+1}.
struct ArchSpec {
    GraphArch kind = GraphArch::DilatedRnn;
    int layers = 0;
    int base = 2;
    int start_exponent = 0;
    int period = 0;
    std::vector<int> dilations;  // required for CustomSchedule, derived otherwise
    int skip = 0;                // RegularSkipRnn skip length (defaults to period)

    void validate_and_fill();
    static ArchSpec dilated(int layers, int base = 2);
    static ArchSpec regular_skip(int layers, int skip);
    static ArchSpec dilated_cnn(int layers);
    static ArchSpec clockwork(int groups);
    static ArchSpec custom(const std::vector<int>& dilations);
};

// Directed multigraph over one period: node 0 is the input, nodes 1..layers
// are the hidden layers; the output is read at output_node (the top layer for
// the stacks, a separate projection node for clockwork). Edge offsets are time
// travels; gate > 1 restricts an edge to destination times t with
// t % gate == 0 (clockwork).
struct GraphEdge {
    int from = 0;
    int to = 0;
    int offset = 0;
    int gate = 1;
};

struct CyclicGraph {
    int period = 1;
    int num_nodes = 0;
    int input_node = 0;
    int output_node = 0;
    int hidden_nodes = 0;
    bool time_gated = false;
    std::vector<GraphEdge> edges;
};

CyclicGraph build_cyclic_graph(const ArchSpec& spec);

inline constexpr int kUnreachable = -1;

// BFS over the unrolled graph: d_i(n) for n = 0..horizon in one sweep.
std::vector<int> shortest_paths_from(const CyclicGraph& g, int i, int horizon);
int shortest_path_oracle(const CyclicGraph& g, int i, int n);

// max_i d_i(n) for n = 1..horizon. For time-invariant graphs all i agree and
// a single BFS suffices; gated graphs scan every residue class.
struct PathTable {
    int horizon = 0;
    std::vector<int> max_over_i;  // index n-1
    bool i_dependent = false;
};

PathTable compute_path_table(const CyclicGraph& g, int horizon);

// Greedy change-making over a divisibility-chain schedule, plus one layer
// edge per layer. kUnreachable if n cannot be represented.
int digit_path_length(long long n, const std::vector<int>& dilations);

// (1/m) sum_n max_i d_i(n), exact; nullopt when some span is unreachable.
std::optional<Rational> mean_recurrent_length_oracle(const CyclicGraph& g);

// Closed-form means: regular skip (s = m) and dilated (M = 2).
Rational mean_recurrent_length_closed_form(const ArchSpec& spec);

struct NrReport {
    Rational literal;           // recurrent edges / all nodes (incl. input)
    Rational per_hidden_layer;  // recurrent edges / hidden nodes
};

NrReport recurrent_edges_per_node(const CyclicGraph& g);

// Largest span reachable plus one; nullopt when spans are unbounded
// (recurrent architectures).
std::optional<int> receptive_field(const CyclicGraph& g);

// All divisibility chains 1 = s_1 <= ... <= s_d = m, deterministic order.
std::vector<std::vector<int>> enumerate_schedules(int d, int m);

struct ScheduleResult {
    std::vector<int> dilations;
    Rational mean_length;
    Rational ratio_sum_stat;  // (sum s_{i+1}/s_i - d + 1) / 2
};

struct OptimalityReport {
    int d = 0;
    int base = 0;
    int period = 0;
    std::vector<ScheduleResult> ranking;  // sorted ascending by mean_length
    std::vector<int> geometric;
    bool geometric_is_strict_min = false;
};

// Exhaustive oracle search over all Eq-9 style schedules with m = M^(d-1).
OptimalityReport verify_optimality(int d, int M);

struct ClockworkReport {
    int d = 0;
    int period = 0;
    std::vector<int> dilated_max;    // max_i d_i(n), n = 1..m
    std::vector<int> clockwork_max;
    Rational dilated_mean;
    Rational clockwork_mean;
    bool clockwork_i_dependent = false;
    bool clockwork_ge_dilated = false;
};

ClockworkReport clockwork_capacity_report(int d);

}  // namespace drnn
