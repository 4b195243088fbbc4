#include "stcsense/bpso.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stcsense/error.hpp"
#include "stcsense/kernels.hpp"
#include "stcsense/parallel.hpp"
#include "stcsense/pattern.hpp"
#include "stcsense/rng.hpp"

namespace stcsense {

void BeamTask::validate() const {
    if (items.empty()) throw_config("task", "beam task has no assignments");
    std::set<int> ks;
    for (const auto& a : items) {
        if (!(a.weight > 0.0)) throw_config("task.weight", "weights must be > 0");
        if (!ks.insert(a.k).second) throw_config("task.k", "harmonic orders must be pairwise distinct");
    }
}

const char* to_string(Aggregate a) { return a == Aggregate::Sum ? "sum" : "geometric"; }

Aggregate parse_aggregate(const std::string& s) {
    if (s == "sum") return Aggregate::Sum;
    if (s == "geometric" || s == "geo") return Aggregate::Geometric;
    throw_config("aggregate", "expected sum or geometric, got '" + s + "'");
}

void BpsoConfig::validate() const {
    require(swarm >= 2, "swarm", "must be >= 2");
    require(iterations >= 1, "iterations", "must be >= 1");
    require(v_max > 0.0, "v_max", "must be > 0");
    require(polish_passes >= 0, "polish_passes", "must be >= 0");
    require(isolation >= 0.0, "isolation", "must be >= 0");
}

double aggregate_fractions(const std::vector<double>& f, const std::vector<double>& w, Aggregate agg) {
    double wsum = 0.0;
    for (double x : w) wsum += x;
    if (agg == Aggregate::Sum) {
        double s = 0.0;
        for (std::size_t t = 0; t < f.size(); ++t) s += w[t] * f[t];
        return s;
    }
    double lg = 0.0;
    for (std::size_t t = 0; t < f.size(); ++t) {
        if (!(f[t] > 0.0)) return 0.0;
        lg += w[t] * std::log(f[t]);
    }
    return wsum * std::exp(lg / wsum);
}

namespace {

// Group-aggregated illuminated weights at a point: W[g] = sum_{e in g} a_e w_e(p).
void group_weights(const RisGeometry& g, const Vec3& p, CodingMode mode, std::vector<double>& wr,
                   std::vector<double>& wi, std::vector<cd>& out) {
    illuminated_weights(g, p, wr.data(), wi.data());
    std::fill(out.begin(), out.end(), cd(0.0));
    for (int m = 0; m < g.M; ++m)
        for (int n = 0; n < g.N; ++n) {
            const std::size_t e = static_cast<std::size_t>(m) * g.N + n;
            out[group_of(mode, g.M, g.N, m, n)] += cd(wr[e], wi[e]);
        }
}

}  // namespace

FocusingModel::FocusingModel(const RisGeometry& g, const FieldGrid& grid, const BeamTask& task, CodingMode mode,
                             Aggregate agg, double isolation)
    : G_(group_count(mode, g.M, g.N)), L_(g.L), mode_(mode), agg_(agg), isolation_(isolation) {
    task.validate();
    g.validate();
    grid.validate();
    if (G_ * static_cast<std::size_t>(L_) > kMaxFullDecision)
        throw_config("mode", "decision vector exceeds 1e6 bits; use column or row sharing");
    const std::size_t E = g.elements();
    std::vector<double> wr(E), wi(E);
    for (const auto& a : task.items) {
        const std::size_t cell = grid.nearest(a.target);
        std::vector<cd> w(G_);
        group_weights(g, grid.point(cell), mode, wr, wi, w);
        target_w_.push_back(std::move(w));
        std::vector<cd> c(static_cast<std::size_t>(L_));
        for (int l = 0; l < L_; ++l) c[static_cast<std::size_t>(l)] = harmonic_coefficient(a.k, l + 1, L_);
        coef_.push_back(std::move(c));
        weights_.push_back(a.weight);
    }

    // Gram matrix accumulated per grid point in a fixed order; rows split across workers.
    const std::size_t P = grid.size();
    std::vector<cd> W(P * G_);
    parallel_for(P, [&](std::size_t p) {
        std::vector<double> lr(E), li(E);
        std::vector<cd> w(G_);
        group_weights(g, grid.point(p), mode, lr, li, w);
        std::copy(w.begin(), w.end(), W.begin() + static_cast<std::ptrdiff_t>(p * G_));
    });
    Q_.assign(G_ * G_, 0.0);
    parallel_for(G_, [&](std::size_t a) {
        for (std::size_t b = 0; b < G_; ++b) {
            double s = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                const cd wa = W[p * G_ + a], wb = W[p * G_ + b];
                s += wa.real() * wb.real() + wa.imag() * wb.imag();
            }
            Q_[a * G_ + b] = s;
        }
    });
}

double FocusingModel::total_power(const std::vector<std::uint8_t>& x) const {
    const auto& kt = kernels::active();
    std::vector<double> gam(G_);
    double tot = 0.0;
    for (int l = 0; l < L_; ++l) {
        for (std::size_t gi = 0; gi < G_; ++gi) gam[gi] = x[gi * L_ + l] ? -1.0 : 1.0;
        tot += kt.quadform(Q_.data(), gam.data(), G_);
    }
    return tot / L_;
}

std::vector<std::vector<cd>> FocusingModel::fields(const std::vector<std::uint8_t>& x) const {
    if (x.size() != dimension()) throw_domain("fitness: decision vector has the wrong length");
    const std::size_t T = target_w_.size();
    std::vector<std::vector<cd>> out(T, std::vector<cd>(T, cd(0.0)));
    std::vector<cd> S(G_);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t gi = 0; gi < G_; ++gi) {
            cd s = 0.0;
            for (int l = 0; l < L_; ++l) {
                const cd& c = coef_[t][static_cast<std::size_t>(l)];
                s += x[gi * L_ + l] ? -c : c;
            }
            S[gi] = s;
        }
        for (std::size_t q = 0; q < T; ++q) {
            cd G = 0.0;
            for (std::size_t gi = 0; gi < G_; ++gi) G += S[gi] * target_w_[q][gi];
            out[t][q] = G;
        }
    }
    return out;
}

std::vector<double> FocusingModel::fractions(const std::vector<std::uint8_t>& x) const {
    const auto G = fields(x);
    const double ptot = total_power(x);
    std::vector<double> f(target_w_.size(), 0.0);
    if (!(ptot > 0.0)) return f;
    for (std::size_t t = 0; t < target_w_.size(); ++t) f[t] = std::norm(G[t][t]) / ptot;
    return f;
}

std::vector<double> FocusingModel::isolations(const std::vector<std::uint8_t>& x) const {
    const auto G = fields(x);
    std::vector<double> iso(target_w_.size(), 0.0);
    for (std::size_t t = 0; t < target_w_.size(); ++t) {
        const double own = std::norm(G[t][t]);
        double all = own;
        for (std::size_t q = 0; q < target_w_.size(); ++q)
            if (q != t) all += std::norm(G[t][q]);
        iso[t] = all > 0.0 ? own / all : 0.0;
    }
    return iso;
}

double FocusingModel::fitness(const std::vector<std::uint8_t>& x) const {
    auto f = fractions(x);
    if (isolation_ > 0.0) {
        const auto iso = isolations(x);
        for (std::size_t t = 0; t < f.size(); ++t) f[t] *= std::pow(iso[t], isolation_);
    }
    return aggregate_fractions(f, weights_, agg_);
}

double focusing_fitness(const StcCoding& c, const BeamTask& task, const RisGeometry& g, const FieldGrid& grid,
                        Aggregate agg) {
    task.validate();
    if (c.M != g.M || c.N != g.N || c.L != g.L) throw_domain("focusing_fitness: coding does not match geometry");
    const std::size_t E = g.elements();
    int kmin = task.items.front().k, kmax = kmin;
    for (const auto& a : task.items) {
        kmin = std::min(kmin, a.k);
        kmax = std::max(kmax, a.k);
    }
    const ElementSpectra spec = compute_element_spectra(c, kmin, kmax);

    std::vector<double> per_point(grid.size());
    parallel_for(grid.size(), [&](std::size_t p) {
        std::vector<double> wr(E), wi(E);
        illuminated_weights(g, grid.point(p), wr.data(), wi.data());
        double s = 0.0;
        for (int l = 0; l < c.L; ++l) {
            cd acc = 0.0;
            for (int m = 0; m < c.M; ++m)
                for (int n = 0; n < c.N; ++n) {
                    const std::size_t e = static_cast<std::size_t>(m) * c.N + n;
                    acc += c.gamma(m, n, l) * cd(wr[e], wi[e]);
                }
            s += std::norm(acc);
        }
        per_point[p] = s / c.L;
    });
    double ptot = 0.0;
    for (double v : per_point) ptot += v;

    std::vector<double> f, w;
    for (const auto& a : task.items) {
        const auto G = field_at(g, spec, grid.point(grid.nearest(a.target)));
        f.push_back(ptot > 0.0 ? std::norm(G[static_cast<std::size_t>(a.k - kmin)]) / ptot : 0.0);
        w.push_back(a.weight);
    }
    return aggregate_fractions(f, w, agg);
}

OptResult bpso_maximize(std::size_t D, const Objective& f, const BpsoConfig& cfg) {
    cfg.validate();
    if (D == 0) throw_domain("bpso: empty decision vector");
    const std::size_t P = static_cast<std::size_t>(cfg.swarm);
    std::vector<Rng> rng;
    rng.reserve(P);
    for (std::size_t p = 0; p < P; ++p) rng.push_back(Rng::substream(cfg.seed, p));

    std::vector<std::vector<std::uint8_t>> x(P, std::vector<std::uint8_t>(D));
    std::vector<std::vector<double>> v(P, std::vector<double>(D));
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t d = 0; d < D; ++d) {
            x[p][d] = rng[p].uniform() < 0.5 ? 1 : 0;
            v[p][d] = rng[p].uniform(-cfg.v_max, cfg.v_max);
        }

    OptResult res;
    std::vector<double> fit(P);
    auto evaluate_all = [&] {
        parallel_for(P, [&](std::size_t p) { fit[p] = f(x[p]); });
        res.evaluations += P;
    };
    evaluate_all();
    auto pbest = x;
    auto pfit = fit;
    std::size_t gi = 0;
    for (std::size_t p = 1; p < P; ++p)
        if (fit[p] > fit[gi]) gi = p;
    std::vector<std::uint8_t> gbest = x[gi];
    double gfit = fit[gi];

    for (int it = 0; it < cfg.iterations; ++it) {
        const double w = cfg.iterations > 1
                             ? cfg.w_start + (cfg.w_end - cfg.w_start) * it / (cfg.iterations - 1)
                             : cfg.w_start;
        parallel_for(P, [&](std::size_t p) {
            Rng& r = rng[p];
            for (std::size_t d = 0; d < D; ++d) {
                const double r1 = r.uniform(), r2 = r.uniform();
                double vel = w * v[p][d] + cfg.c1 * r1 * (double(pbest[p][d]) - x[p][d]) +
                             cfg.c2 * r2 * (double(gbest[d]) - x[p][d]);
                vel = std::clamp(vel, -cfg.v_max, cfg.v_max);
                v[p][d] = vel;
                x[p][d] = r.uniform() < 1.0 / (1.0 + std::exp(-vel)) ? 1 : 0;
            }
        });
        evaluate_all();
        for (std::size_t p = 0; p < P; ++p) {
            if (fit[p] > pfit[p]) {
                pfit[p] = fit[p];
                pbest[p] = x[p];
            }
            if (fit[p] > gfit) {
                gfit = fit[p];
                gbest = x[p];
            }
        }
        res.trace.push_back(gfit);
    }
    res.swarm_iterations = cfg.iterations;

    for (int pass = 0; pass < cfg.polish_passes; ++pass) {
        bool improved = false;
        for (std::size_t d = 0; d < D; ++d) {
            gbest[d] ^= 1;
            const double fv = f(gbest);
            ++res.evaluations;
            if (fv > gfit) {
                gfit = fv;
                improved = true;
            } else {
                gbest[d] ^= 1;
            }
        }
        res.trace.push_back(gfit);
        if (!improved) break;
    }

    res.best_x = gbest;
    res.best_fitness = gfit;
    return res;
}

OptResult bpso_optimize(const FocusingModel& model, const RisGeometry& g, const BpsoConfig& cfg) {
    if (model.mode() != cfg.mode) throw_config("mode", "model and BPSO config disagree on coding symmetry");
    OptResult r = bpso_maximize(model.dimension(), [&](const std::vector<std::uint8_t>& x) { return model.fitness(x); }, cfg);
    r.best = expand_groups(cfg.mode, g.M, g.N, g.L, r.best_x);
    return r;
}

OptResult bpso_optimize(const BeamTask& task, const RisGeometry& g, const FieldGrid& grid, const BpsoConfig& cfg) {
    cfg.validate();
    const FocusingModel model(g, grid, task, cfg.mode, cfg.aggregate, cfg.isolation);
    return bpso_optimize(model, g, cfg);
}

BruteForceResult brute_force(std::size_t D, const Objective& f) {
    if (D == 0 || D > 24) throw_domain("brute_force: dimension must be in [1, 24]");
    BruteForceResult r;
    r.best_fitness = -1.0;
    std::vector<std::uint8_t> x(D);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << D); ++code) {
        for (std::size_t d = 0; d < D; ++d) x[d] = (code >> d) & 1;
        const double v = f(x);
        if (v > r.best_fitness) {
            r.best_fitness = v;
            r.best_x = x;
        }
    }
    return r;
}

}  // namespace stcsense
