#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stcsense/coding.hpp"
#include "stcsense/geometry.hpp"

namespace stcsense {

struct BeamAssignment {
    int k = 1;
    Vec3 target;
    double weight = 1.0;
};

struct BeamTask {
    std::vector<BeamAssignment> items;
    void validate() const;
};

// Sum: sum_t w_t f_t. Geometric: (prod_t f_t^{w_t})^{1/sum w} * sum w. Both lie in [0, sum w] and
// agree for a single assignment. f_t = |G_{k_t}(p_t)|^2 / P_total, optionally times a power of
// the isolation of beam t from the other targets.
enum class Aggregate { Sum, Geometric };
const char* to_string(Aggregate a);
Aggregate parse_aggregate(const std::string& s);

struct BpsoConfig {
    int swarm = 40;
    int iterations = 300;
    double w_start = 0.9, w_end = 0.4;
    double c1 = 2.0, c2 = 2.0;
    double v_max = 6.0;
    std::uint64_t seed = 1;
    CodingMode mode = CodingMode::ColumnShared;
    Aggregate aggregate = Aggregate::Sum;
    int polish_passes = 0;  // greedy single-bit refinement of gbest after the swarm loop
    double isolation = 0.0; // f_t is multiplied by isolation_t^this (see FocusingModel); 0 disables
    void validate() const;
};

struct OptResult {
    StcCoding best;
    std::vector<std::uint8_t> best_x;
    double best_fitness = 0.0;
    std::vector<double> trace;  // gbest fitness after each iteration, then after each polish pass
    std::size_t evaluations = 0;
    int swarm_iterations = 0;
};

// Precomputed focusing objective over a shared-coding decision vector.
// P_total sums |G_k|^2 over all harmonics and grid points using the slot-domain identity
//   sum_k |G_k(p)|^2 = (1/L) sum_l |sum_e a_e w_e(p) Gamma^l_e|^2.
class FocusingModel {
public:
    FocusingModel(const RisGeometry& g, const FieldGrid& grid, const BeamTask& task, CodingMode mode,
                  Aggregate agg = Aggregate::Sum, double isolation = 0.0);

    std::size_t dimension() const { return G_ * static_cast<std::size_t>(L_); }
    std::size_t groups() const { return G_; }
    int slots() const { return L_; }
    CodingMode mode() const { return mode_; }
    Aggregate aggregate() const { return agg_; }

    double fitness(const std::vector<std::uint8_t>& x) const;
    // |G_{k_t}(p_t)|^2 / P_total per assignment.
    std::vector<double> fractions(const std::vector<std::uint8_t>& x) const;
    double total_power(const std::vector<std::uint8_t>& x) const;
    // fields(x)[t][q] = G_{k_t}(p_q): harmonic t's field at every target cell.
    std::vector<std::vector<cd>> fields(const std::vector<std::uint8_t>& x) const;
    // |G_{k_t}(p_t)|^2 / sum_q |G_{k_t}(p_q)|^2; 1 for a single assignment.
    std::vector<double> isolations(const std::vector<std::uint8_t>& x) const;
    double isolation() const { return isolation_; }

private:
    std::size_t G_ = 0;
    int L_ = 0;
    CodingMode mode_;
    Aggregate agg_;
    double isolation_ = 0.0;
    std::vector<double> weights_;
    std::vector<std::vector<cd>> target_w_;  // [t][g]
    std::vector<std::vector<cd>> coef_;      // [t][l]
    std::vector<double> Q_;                  // G x G, Re(W^H W) over the grid
};

double aggregate_fractions(const std::vector<double>& f, const std::vector<double>& w, Aggregate agg);

// Fitness of an arbitrary coding, evaluated element by element (no symmetry assumed).
double focusing_fitness(const StcCoding& c, const BeamTask& task, const RisGeometry& g, const FieldGrid& grid,
                        Aggregate agg = Aggregate::Sum);

using Objective = std::function<double(const std::vector<std::uint8_t>&)>;

// Canonical binary PSO maximizing `f` over {0,1}^D, followed by optional polish passes.
OptResult bpso_maximize(std::size_t D, const Objective& f, const BpsoConfig& cfg);

OptResult bpso_optimize(const BeamTask& task, const RisGeometry& g, const FieldGrid& grid, const BpsoConfig& cfg);
OptResult bpso_optimize(const FocusingModel& model, const RisGeometry& g, const BpsoConfig& cfg);

struct BruteForceResult {
    double best_fitness = 0.0;
    std::vector<std::uint8_t> best_x;
};
// Exhaustive search; D <= 24.
BruteForceResult brute_force(std::size_t D, const Objective& f);

constexpr std::size_t kMaxFullDecision = 1000000;

}  // namespace stcsense
