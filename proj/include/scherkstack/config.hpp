#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scherkstack/errors.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

enum class Mode { TPMS, DPMS };

inline const char* mode_name(Mode m) { return m == Mode::TPMS ? "TPMS" : "DPMS"; }

inline Mode parse_mode(const std::string& s) {
    if (s == "TPMS") return Mode::TPMS;
    if (s == "DPMS") return Mode::DPMS;
    throw DomainError("mode must be \"TPMS\" or \"DPMS\", got \"" + s + "\"");
}

// A stack of n sphere layers joined at nodes. TPMS mode closes the stack into a
// cycle (nodes k = 1..n); DPMS mode leaves the two boundary nodes unopened
// (interior nodes k = 1..n-1, virtual nodes at k = 0 and k = n).
struct Configuration {
    int n = 0;
    std::vector<double> ell;  // gap lengths, one per interior node
    std::vector<double> psi;  // phase differences, one per interior node
    double theta = 0.0;
    double Psi1 = 0.0;  // sum of psi over odd node indices
    double Psi2 = 0.0;  // sum of psi over even node indices
    double Lambda1 = 0.0;
    double Lambda2 = 0.0;
    Mode mode = Mode::TPMS;

    Configuration() = default;

    Configuration(int n_, std::vector<double> ell_, std::vector<double> psi_, double theta_,
                  double lambda1 = 0.0, double lambda2 = 0.0, Mode mode_ = Mode::TPMS)
        : n(n_), ell(std::move(ell_)), psi(std::move(psi_)), theta(theta_),
          Lambda1(lambda1), Lambda2(lambda2), mode(mode_) {
        Psi1 = phase_sum(1);
        Psi2 = phase_sum(2);
        validate();
    }

    int interior_nodes() const { return mode == Mode::TPMS ? n : n - 1; }

    double phase_sum(int parity) const {
        double s = 0.0;
        for (int k = 1; k <= interior_nodes(); ++k)
            if (k % 2 == parity % 2) s += psi[static_cast<std::size_t>(k - 1)];
        return s;
    }

    void validate() const {
        if (mode == Mode::TPMS) {
            if (n < 2 || n % 2 != 0)
                throw DomainError("mode TPMS requires an even layer count n >= 2");
        } else if (n < 1) {
            throw DomainError("layer count n must be positive");
        }
        if (!(theta > 0.0 && theta < pi / 2.0))
            throw DomainError("theta must lie strictly between 0 and pi/2");
        const auto want = static_cast<std::size_t>(interior_nodes());
        if (ell.size() != want)
            throw DomainError("ell must have one entry per interior node (" + std::to_string(want) + ")");
        if (psi.size() != want)
            throw DomainError("psi must have one entry per interior node (" + std::to_string(want) + ")");
        for (double l : ell)
            if (!(l > 0.0)) throw DomainError("every gap length must be positive");
        if (mode == Mode::TPMS) {
            const double sum = std::accumulate(ell.begin(), ell.end(), 0.0);
            if (std::abs(sum - 1.0) > 1e-12)
                throw DomainError("gap lengths must sum to 1, got " + std::to_string(sum));
        }
        if (std::abs(Psi1 - phase_sum(1)) > 1e-12 || std::abs(Psi2 - phase_sum(2)) > 1e-12)
            throw DomainError("Psi1/Psi2 do not match the stored phase differences");
    }

    rvec2 T1() const { return {std::cos(theta), std::sin(theta)}; }
    rvec2 T2() const { return {-std::cos(theta), std::sin(theta)}; }
    rvec2 T3() const {
        const rvec2 a = T1(), b = T2();
        return {Psi1 * a[0] + Psi2 * b[0], Psi1 * a[1] + Psi2 * b[1]};
    }

    double ell_max() const {
        if (ell.empty()) return std::numeric_limits<double>::infinity();  // no interior nodes
        return *std::max_element(ell.begin(), ell.end());
    }
    double tau_max(double epsilon) const { return std::exp(-ell_max() / (epsilon * epsilon)); }

    // Node index folded into the canonical range (cyclic in TPMS mode).
    int canonical_node(int k) const {
        if (mode == Mode::TPMS) return ((k - 1) % n + n) % n + 1;
        return k;
    }

    bool node_opened(int k) const {
        if (mode == Mode::TPMS) return true;
        return k >= 1 && k <= n - 1;
    }

    // Alternating direction class of node k: 1 for odd indices, 2 for even.
    int direction_class(int k) const { return canonical_node(k) % 2 == 1 ? 1 : 2; }
    double Lambda_of(int k) const { return direction_class(k) == 1 ? Lambda1 : Lambda2; }
    rvec2 T_of(int k) const { return direction_class(k) == 1 ? T1() : T2(); }

    double ell_of(int k) const {
        const int c = canonical_node(k);
        if (!node_opened(c)) throw DomainError("node " + std::to_string(k) + " has no gap length");
        return ell[static_cast<std::size_t>(c - 1)];
    }
    double psi_of(int k) const {
        const int c = canonical_node(k);
        if (!node_opened(c)) throw DomainError("node " + std::to_string(k) + " has no phase difference");
        return psi[static_cast<std::size_t>(c - 1)];
    }
};

inline nlohmann::json configuration_to_json(const Configuration& c) {
    return nlohmann::json{{"n", c.n},         {"ell", c.ell},         {"psi", c.psi},
                          {"theta", c.theta}, {"Psi1", c.Psi1},       {"Psi2", c.Psi2},
                          {"Lambda1", c.Lambda1}, {"Lambda2", c.Lambda2}, {"mode", mode_name(c.mode)}};
}

inline Configuration configuration_from_json(const nlohmann::json& j) {
    try {
        Configuration c(j.at("n").get<int>(), j.at("ell").get<std::vector<double>>(),
                        j.at("psi").get<std::vector<double>>(), j.at("theta").get<double>(),
                        j.value("Lambda1", 0.0), j.value("Lambda2", 0.0),
                        parse_mode(j.value("mode", std::string("TPMS"))));
        if (j.contains("Psi1") && std::abs(j.at("Psi1").get<double>() - c.Psi1) > 1e-12)
            throw DomainError("Psi1 does not match the sum of psi over odd nodes");
        if (j.contains("Psi2") && std::abs(j.at("Psi2").get<double>() - c.Psi2) > 1e-12)
            throw DomainError("Psi2 does not match the sum of psi over even nodes");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("configuration JSON: ") + e.what());
    }
}

inline Configuration load_configuration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open configuration file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("configuration JSON parse: ") + e.what());
    }
    return configuration_from_json(j);
}

} // namespace scherkstack
