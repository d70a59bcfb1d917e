#include "opasis/dc_power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "opasis/error.hpp"
#include "opasis/lp.hpp"
#include "opasis/summation.hpp"

namespace opasis {

Islands find_islands(const Network& net, const SystemState& state) {
    if (state.size() != component_count(net)) throw IntegrityError("state length does not match the network");
    const std::size_t n = net.bus_count();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&parent](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (ComponentIndex k = 0; k < net.branch_count(); ++k) {
        if (!state.in_service(k)) continue;
        std::size_t a = root(net.from_index(k));
        std::size_t b = root(net.to_index(k));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    // Roots are the smallest bus index in each component, and buses are in
    // id order, so scanning in index order numbers islands by lowest-id bus.
    Islands out;
    out.island_of_bus.assign(n, 0);
    std::vector<std::size_t> label(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t r = root(v);
        if (label[r] == std::numeric_limits<std::size_t>::max()) {
            label[r] = out.reference_bus.size();
            out.reference_bus.push_back(r);
        }
        out.island_of_bus[v] = label[r];
    }
    return out;
}

namespace {

// The reduced susceptance system of one island, with the reference bus
// removed. Local index 0 is the reference.
class IslandSystem {
public:
    IslandSystem(const Network& net, const SystemState& state, const Islands& islands, std::size_t island,
                 std::vector<std::size_t>& local_scratch)
        : net_(&net), local_(&local_scratch) {
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (islands.island_of_bus[b] == island) buses_.push_back(b);
        }
        for (std::size_t i = 0; i < buses_.size(); ++i) local_scratch[buses_[i]] = i;
        for (ComponentIndex k = 0; k < net.branch_count(); ++k) {
            if (state.in_service(k) && islands.island_of_bus[net.from_index(k)] == island) branches_.push_back(k);
        }
        if (buses_.size() < 2) return;

        const auto dim = static_cast<Eigen::Index>(buses_.size() - 1);
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(branches_.size() * 4);
        for (ComponentIndex k : branches_) {
            double b = 1.0 / net.branches()[k].reactance;
            auto f = static_cast<Eigen::Index>(local(net.from_index(k))) - 1;
            auto t = static_cast<Eigen::Index>(local(net.to_index(k))) - 1;
            if (f >= 0) triplets.emplace_back(f, f, b);
            if (t >= 0) triplets.emplace_back(t, t, b);
            if (f >= 0 && t >= 0) {
                triplets.emplace_back(f, t, -b);
                triplets.emplace_back(t, f, -b);
            }
        }
        Eigen::SparseMatrix<double> bmat(dim, dim);
        bmat.setFromTriplets(triplets.begin(), triplets.end());
        solver_.compute(bmat);
        if (solver_.info() != Eigen::Success) {
            throw StructuralError("singular susceptance matrix in island of bus '" + net.buses()[buses_[0]].id + "'");
        }
    }

    const std::vector<std::size_t>& buses() const { return buses_; }
    const std::vector<ComponentIndex>& branches() const { return branches_; }
    std::size_t local(std::size_t bus) const { return (*local_)[bus]; }

    /// Branch flows for injections given per global bus index.
    void flows(std::span<const double> injections, std::vector<double>& out) const {
        if (buses_.size() < 2) return;
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(buses_.size() - 1));
        for (std::size_t i = 1; i < buses_.size(); ++i) rhs[static_cast<Eigen::Index>(i - 1)] = injections[buses_[i]];
        Eigen::VectorXd theta = solver_.solve(rhs);
        if (solver_.info() != Eigen::Success) throw StructuralError("DC flow solve failed");
        auto angle = [&](std::size_t bus) {
            std::size_t l = local(bus);
            return l == 0 ? 0.0 : theta[static_cast<Eigen::Index>(l - 1)];
        };
        for (ComponentIndex k : branches_) {
            out[k] = (angle(net_->from_index(k)) - angle(net_->to_index(k))) / net_->branches()[k].reactance;
        }
    }

    /// Sensitivity of branch k's flow to an injection at each local bus,
    /// withdrawn at the reference.
    std::vector<double> ptdf_row(ComponentIndex k) const {
        std::vector<double> row(buses_.size(), 0.0);
        if (buses_.size() < 2) return row;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(buses_.size() - 1));
        const double inv_x = 1.0 / net_->branches()[k].reactance;
        auto f = static_cast<Eigen::Index>(local(net_->from_index(k))) - 1;
        auto t = static_cast<Eigen::Index>(local(net_->to_index(k))) - 1;
        if (f >= 0) rhs[f] += inv_x;
        if (t >= 0) rhs[t] -= inv_x;
        Eigen::VectorXd y = solver_.solve(rhs);
        for (std::size_t i = 1; i < buses_.size(); ++i) row[i] = y[static_cast<Eigen::Index>(i - 1)];
        return row;
    }

private:
    const Network* net_;
    std::vector<std::size_t>* local_;
    std::vector<std::size_t> buses_;
    std::vector<ComponentIndex> branches_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

bool over_limit(double flow, double limit) { return std::abs(flow) > limit + kPowerTolMw; }

class IslandDispatch {
public:
    IslandDispatch(const Network& net, const IslandSystem& sys, std::size_t island, DispatchResult& out)
        : net_(net), sys_(sys), out_(out) {
        cert_.island = island;
        for (std::size_t g = 0; g < net.generators().size(); ++g) {
            if (sys.local(net.generator_bus_index(g)) < sys.buses().size() &&
                sys.buses()[sys.local(net.generator_bus_index(g))] == net.generator_bus_index(g)) {
                gens_.push_back(g);
            }
        }
        for (std::size_t b : sys.buses()) {
            if (net.buses()[b].load_mw > 0.0) loads_.push_back(b);
        }
    }

    void run() {
        double cap = 0.0;
        double load = 0.0;
        for (std::size_t g : gens_) cap += net_.generators()[g].capacity_mw;
        for (std::size_t b : loads_) load += net_.buses()[b].load_mw;

        // Proportional dispatch. When it respects every limit it already
        // attains the lower bound max(0, load - cap) on shed.
        if (load > 0.0) {
            double gen_scale = cap > 0.0 ? std::min(1.0, load / cap) : 0.0;
            double serve_scale = std::min(1.0, cap / load);
            for (std::size_t g : gens_) out_.flow.generation[g] = net_.generators()[g].capacity_mw * gen_scale;
            for (std::size_t b : loads_) out_.flow.served_load[b] = net_.buses()[b].load_mw * serve_scale;
        }
        std::vector<ComponentIndex> violated = refresh_flows();
        if (!violated.empty()) solve_lp(std::move(violated));

        for (std::size_t b : loads_) {
            out_.shed.per_bus_shed[b] = std::max(0.0, net_.buses()[b].load_mw - out_.flow.served_load[b]);
        }
        out_.certificates.push_back(std::move(cert_));
    }

private:
    std::vector<ComponentIndex> refresh_flows() {
        for (std::size_t b : sys_.buses()) injection_scratch()[b] = -out_.flow.served_load[b];
        for (std::size_t g : gens_) injection_scratch()[net_.generator_bus_index(g)] += out_.flow.generation[g];
        sys_.flows(injection_scratch(), out_.flow.branch_flows);
        std::vector<ComponentIndex> violated;
        for (ComponentIndex k : sys_.branches()) {
            if (over_limit(out_.flow.branch_flows[k], net_.branches()[k].flow_limit_mw)) violated.push_back(k);
        }
        return violated;
    }

    std::vector<double>& injection_scratch() {
        if (injections_.empty()) injections_.assign(net_.bus_count(), 0.0);
        return injections_;
    }

    // Constraint generation: solve with the limits seen violated so far,
    // add any newly violated ones, repeat. The last relaxation is feasible
    // for every limit, hence optimal for the full problem.
    //
    // Generation moves from the proportional point g0 as g0 + up - down.
    // Among the minimum-shed vertices the LP takes the one with the least
    // movement, which keeps the number of limits that ever bind small.
    void solve_lp(std::vector<ComponentIndex> active) {
        cert_.solved_by_lp = true;
        std::vector<std::vector<double>> ptdf;
        for (ComponentIndex k : active) ptdf.push_back(sys_.ptdf_row(k));

        const std::size_t ng = gens_.size();
        const std::size_t nl = loads_.size();
        std::vector<double> g0(ng);
        for (std::size_t i = 0; i < ng; ++i) g0[i] = out_.flow.generation[gens_[i]];

        for (std::size_t round = 0;; ++round) {
            if (round > net_.branch_count()) throw SolverError("dispatch: constraint generation did not converge");
            const std::size_t nf = active.size();
            const std::size_t shed0 = 2 * ng;
            const std::size_t flow0 = shed0 + nl;
            lp::Problem prob = lp::Problem::zeros(1 + nf, flow0 + nf);
            prob.c2.assign(prob.cols, 0.0);

            double imbalance = 0.0;
            for (std::size_t i = 0; i < ng; ++i) {
                std::size_t g = gens_[i];
                std::size_t lb = sys_.local(net_.generator_bus_index(g));
                prob.upper[i] = std::max(0.0, net_.generators()[g].capacity_mw - g0[i]);
                prob.upper[ng + i] = g0[i];
                prob.c2[i] = 1.0;
                prob.c2[ng + i] = 1.0;
                prob.at(0, i) = 1.0;
                prob.at(0, ng + i) = -1.0;
                imbalance -= g0[i];
                for (std::size_t r = 0; r < nf; ++r) {
                    prob.at(1 + r, i) = ptdf[r][lb];
                    prob.at(1 + r, ng + i) = -ptdf[r][lb];
                    prob.b[1 + r] -= ptdf[r][lb] * g0[i];
                }
            }
            for (std::size_t i = 0; i < nl; ++i) {
                std::size_t b = loads_[i];
                double ld = net_.buses()[b].load_mw;
                prob.upper[shed0 + i] = ld;
                prob.c[shed0 + i] = 1.0;
                prob.at(0, shed0 + i) = 1.0;
                imbalance += ld;
                std::size_t lb = sys_.local(b);
                for (std::size_t r = 0; r < nf; ++r) {
                    prob.at(1 + r, shed0 + i) = ptdf[r][lb];
                    prob.b[1 + r] += ptdf[r][lb] * ld;
                }
            }
            prob.b[0] = imbalance;
            for (std::size_t r = 0; r < nf; ++r) {
                double limit = net_.branches()[active[r]].flow_limit_mw;
                prob.lower[flow0 + r] = -limit;
                prob.upper[flow0 + r] = limit;
                prob.at(1 + r, flow0 + r) = -1.0;
            }

            lp::Solution sol = lp::solve(prob);

            for (std::size_t i = 0; i < ng; ++i) {
                double g = g0[i] + sol.x[i] - sol.x[ng + i];
                out_.flow.generation[gens_[i]] = std::clamp(g, 0.0, net_.generators()[gens_[i]].capacity_mw);
            }
            for (std::size_t i = 0; i < nl; ++i) {
                double ld = net_.buses()[loads_[i]].load_mw;
                out_.flow.served_load[loads_[i]] = ld - std::clamp(sol.x[shed0 + i], 0.0, ld);
            }
            cert_.balance_dual = sol.duals[0];
            cert_.flow_duals.clear();
            for (std::size_t r = 0; r < nf; ++r) cert_.flow_duals.emplace_back(active[r], sol.duals[1 + r]);

            std::vector<ComponentIndex> violated = refresh_flows();
            if (violated.empty()) return;
            for (ComponentIndex k : violated) {
                if (std::find(active.begin(), active.end(), k) != active.end()) {
                    throw SolverError("dispatch: LP solution violates an enforced flow limit");
                }
                active.push_back(k);
                ptdf.push_back(sys_.ptdf_row(k));
            }
        }
    }

    const Network& net_;
    const IslandSystem& sys_;
    DispatchResult& out_;
    IslandCertificate cert_;
    std::vector<std::size_t> gens_;
    std::vector<std::size_t> loads_;
    std::vector<double> injections_;
};

}  // namespace

std::vector<double> dc_flow(const Network& net, const SystemState& state, std::span<const double> injections_mw) {
    if (injections_mw.size() != net.bus_count()) throw UsageError("dc_flow: one injection per bus required");
    Islands islands = find_islands(net, state);
    std::vector<double> flows(net.branch_count(), 0.0);
    std::vector<std::size_t> local(net.bus_count(), 0);
    for (std::size_t island = 0; island < islands.count(); ++island) {
        IslandSystem sys(net, state, islands, island, local);
        std::vector<double> inj;
        double scale = 1.0;
        for (std::size_t b : sys.buses()) {
            inj.push_back(injections_mw[b]);
            scale = std::max(scale, std::abs(injections_mw[b]));
        }
        if (std::abs(compensated_sum(inj)) > kPowerTolMw * scale) {
            throw UsageError("dc_flow: injections do not balance in island of bus '" +
                             net.buses()[sys.buses()[0]].id + "'");
        }
        sys.flows(injections_mw, flows);
    }
    return flows;
}

DispatchResult dispatch(const Network& net, const SystemState& state) {
    DispatchResult out;
    out.flow.islands = find_islands(net, state);
    out.flow.branch_flows.assign(net.branch_count(), 0.0);
    out.flow.served_load.assign(net.bus_count(), 0.0);
    out.flow.generation.assign(net.generators().size(), 0.0);
    out.shed.per_bus_shed.assign(net.bus_count(), 0.0);

    std::vector<std::size_t> local(net.bus_count(), 0);
    for (std::size_t island = 0; island < out.flow.islands.count(); ++island) {
        IslandSystem sys(net, state, out.flow.islands, island, local);
        IslandDispatch(net, sys, island, out).run();
    }
    double total = compensated_sum(out.shed.per_bus_shed);
    out.shed.total_shed_mw = std::nearbyint(total * 1e6) / 1e6;
    return out;
}

DispatchCache::DispatchCache(const Network& net, std::size_t capacity) : net_(&net), capacity_(capacity) {}

std::shared_ptr<const DispatchResult> DispatchCache::get(const SystemState& state) {
    auto key = state.key();
    if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
    }
    ++misses_;
    auto result = std::make_shared<const DispatchResult>(dispatch(*net_, state));
    if (entries_.size() < capacity_) entries_.emplace(std::move(key), result);
    return result;
}

Network with_derived_flow_limits(const Network& net, double factor, double floor_mw) {
    if (!(factor > 0.0) || !(floor_mw > 0.0)) throw UsageError("derived limits need positive factor and floor");
    std::vector<Branch> unlimited = net.branches();
    for (Branch& br : unlimited) br.flow_limit_mw = std::numeric_limits<double>::infinity();
    Network base(net.buses(), unlimited, net.generators(), net.base_mva());
    DispatchResult d = dispatch(base, SystemState::intact(base));

    std::vector<Branch> limited = net.branches();
    for (ComponentIndex k = 0; k < limited.size(); ++k) {
        limited[k].flow_limit_mw = std::max(factor * std::abs(d.flow.branch_flows[k]), floor_mw);
    }
    return Network(net.buses(), std::move(limited), net.generators(), net.base_mva());
}

}  // namespace opasis
