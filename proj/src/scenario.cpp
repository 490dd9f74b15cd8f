#include "dcep/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dcep {

void Scenario::validate() const {
    size_t n = t.size();
    if (n < static_cast<size_t>(tau))
        throw std::invalid_argument("scenario must have at least tau rows");
    if (T_oawb.size() != n || q_L_ref.size() != n || rho.size() != n || rho_bar.size() != n)
        throw std::invalid_argument("scenario columns have inconsistent lengths");
    for (size_t k = 0; k + 1 < n; ++k)
        if (std::abs((t[k + 1] - t[k]) - t_s) > 1e-6)
            throw std::invalid_argument("scenario timestamps must be uniformly spaced by t_s");
    for (double p : rho)
        if (!(p > 0)) throw std::invalid_argument("scenario prices must be positive");
    for (double q : q_L_ref)
        if (q < 0) throw std::invalid_argument("scenario loads must be nonnegative");
}

void Scenario::recompute_rho_bar() {
    size_t n = rho.size();
    rho_bar.assign(n, 0.0);
    double run = 0.0;
    for (size_t k = 0; k < n; ++k) {
        run += rho[k];
        if (k >= static_cast<size_t>(tau)) run -= rho[k - tau];
        size_t cnt = std::min(k + 1, static_cast<size_t>(tau));
        rho_bar[k] = run / static_cast<double>(cnt);
    }
}

Scenario Scenario::load_csv(const std::string& path, double t_s, int tau) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario: " + path);
    Scenario sc;
    sc.t_s = t_s;
    sc.tau = tau;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("scenario file is empty: " + path);
    if (line.rfind("timestamp_s,T_oawb_C,q_L_ref_kW,price_usd_per_kWh", 0) != 0)
        throw std::runtime_error("scenario header mismatch in " + path);
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double ts, wb, q, p;
        char c1, c2, c3;
        if (!(ss >> ts >> c1 >> wb >> c2 >> q >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',')
            throw std::runtime_error(path + ": bad row at line " + std::to_string(lineno));
        sc.t.push_back(ts);
        sc.T_oawb.push_back(wb);
        sc.q_L_ref.push_back(q);
        sc.rho.push_back(p);
    }
    sc.recompute_rho_bar();
    sc.validate();
    return sc;
}

void Scenario::save_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write scenario: " + path);
    f << "timestamp_s,T_oawb_C,q_L_ref_kW,price_usd_per_kWh\n";
    f.precision(17);
    for (size_t k = 0; k < t.size(); ++k)
        f << t[k] << ',' << T_oawb[k] << ',' << q_L_ref[k] << ',' << rho[k] << '\n';
}

namespace {

// Smooth first-order autoregressive noise, variance-normalized.
struct ArNoise {
    std::mt19937_64 rng;
    std::normal_distribution<double> gauss{0.0, 1.0};
    double phi, state = 0.0;
    ArNoise(std::uint64_t seed, double phi_) : rng(seed), phi(phi_) {}
    double next() {
        state = phi * state + std::sqrt(1.0 - phi * phi) * gauss(rng);
        return state;
    }
};

double bump(double h, double center, double width) {
    double d = (h - center) / width;
    return std::exp(-0.5 * d * d);
}

}  // namespace

Scenario Scenario::synth(std::uint64_t seed, int days, const std::string& profile, double t_s,
                         int tau) {
    if (days < 1) throw std::invalid_argument("synth scenario needs at least one day");
    bool week_shape = profile == "week";
    if (!week_shape && profile != "flat")
        throw std::invalid_argument("unknown scenario profile: " + profile);

    Scenario sc;
    sc.t_s = t_s;
    sc.tau = tau;
    int per_day = static_cast<int>(std::lround(86400.0 / t_s));
    int n = days * per_day;

    ArNoise load_noise(seed * 6364136223846793005ULL + 1, 0.95);
    ArNoise wb_noise(seed * 6364136223846793005ULL + 2, 0.97);
    ArNoise price_noise(seed * 6364136223846793005ULL + 3, 0.9);

    const double two_pi = 2.0 * M_PI;
    for (int k = 0; k < n; ++k) {
        double sec = k * t_s;
        double h = std::fmod(sec / 3600.0, 24.0);
        int day = static_cast<int>(sec / 86400.0);
        bool weekend = week_shape && (day % 7 >= 5);

        double load = 1313.0 * (1.0 + 0.35 * std::sin(two_pi * (h - 9.5) / 24.0));
        if (weekend) load *= 0.88;
        load *= 1.0 + 0.03 * load_noise.next();
        load = std::clamp(load, 300.0, 3800.0);

        double wb = 25.2 + 1.8 * std::sin(two_pi * (h - 10.0) / 24.0) + 0.25 * wb_noise.next();
        wb = std::clamp(wb, 21.0, 27.5);

        double price = 0.05 + 0.07 * bump(h, 9.5, 1.6) + 0.09 * bump(h, 19.0, 2.1);
        if (weekend) price = 0.05 + 0.3 * (price - 0.05);
        price *= 1.0 + 0.04 * price_noise.next();
        price = std::max(price, 0.015);

        sc.t.push_back(sec);
        sc.T_oawb.push_back(wb);
        sc.q_L_ref.push_back(load);
        sc.rho.push_back(price);
    }
    sc.recompute_rho_bar();
    sc.validate();
    return sc;
}

}  // namespace dcep
