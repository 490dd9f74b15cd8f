#include "dcep/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcep {

RunReport load_trajectory_csv(const std::string& path, const std::string& name) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trajectory: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty trajectory: " + path);

    RunReport rep;
    rep.name = name;
    double sq_err = 0.0, t_sum = 0.0, t_sq = 0.0;
    std::vector<int> n_trace;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<double> v;
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != 29) throw std::runtime_error("bad trajectory row in " + path);
        TrajectoryRow r;
        r.k = static_cast<int>(v[0]);
        Eigen::Matrix<double, 8, 1> xv;
        for (int i = 0; i < 8; ++i) xv[i] = v[1 + i];
        r.x = PlantState::from_vector(xv);
        r.out.q_L = v[9];
        r.out.q_ch = v[10];
        r.out.q_ct = v[11];
        r.out.q_cond = v[12];
        r.out.P_ch = v[13];
        r.out.P_chw_pump = v[14];
        r.out.P_cw_pump = v[15];
        r.out.P_ct = v[16];
        r.out.P_tot = v[17];
        r.out.c_E = v[18];
        r.u.m_lw = v[19];
        r.u.m_tw = v[20];
        r.u.n_ch = static_cast<int>(v[21]);
        r.u.m_cw = v[22];
        r.u.m_oa = v[23];
        r.T_oawb = v[24];
        r.q_L_ref = v[25];
        r.rho = v[26];
        r.rho_bar = v[27];
        r.decide_seconds = v[28];
        rep.trajectory.push_back(r);

        rep.total_cost += r.out.c_E;
        double err = r.q_L_ref - r.out.q_L;
        sq_err += err * err;
        t_sum += r.decide_seconds;
        t_sq += r.decide_seconds * r.decide_seconds;
        n_trace.push_back(r.u.n_ch);
    }
    int n = static_cast<int>(rep.trajectory.size());
    if (n == 0) throw std::runtime_error("trajectory has no rows: " + path);
    rep.e_rmse = n > 1 ? std::sqrt(sq_err / (n - 1)) : 0.0;
    rep.n_switch = sum_abs_switches(n_trace);
    rep.timing_mean_s = t_sum / n;
    double var = n > 1 ? (t_sq - n * rep.timing_mean_s * rep.timing_mean_s) / (n - 1) : 0.0;
    rep.timing_std_s = std::sqrt(std::max(0.0, var));
    return rep;
}

void write_comparison_csv(const std::vector<RunReport>& runs, const std::string& path) {
    double base_cost = 0.0;
    bool have_base = false;
    for (const auto& r : runs)
        if (r.name == "baseline") {
            base_cost = r.total_cost;
            have_base = true;
        }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write comparison table: " + path);
    f << "controller,total_cost_usd,savings_vs_baseline,e_rmse_kW,n_switch,"
         "time_mean_s,time_std_s\n";
    f.precision(10);
    for (const auto& r : runs) {
        f << r.name << ',' << r.total_cost << ',';
        if (have_base && base_cost > 0)
            f << 1.0 - r.total_cost / base_cost;
        else
            f << "";
        f << ',' << r.e_rmse << ',' << r.n_switch << ',' << r.timing_mean_s << ','
          << r.timing_std_s << '\n';
    }
}

namespace {

struct Series {
    std::string label;
    std::string color;
    const std::vector<double>* y = nullptr;
};

constexpr int kW = 960, kH = 320;
constexpr int kMarginL = 60, kMarginR = 60, kMarginT = 28, kMarginB = 34;

double nice_min(const std::vector<const std::vector<double>*>& cols) {
    double m = 1e300;
    for (auto* c : cols)
        for (double v : *c) m = std::min(m, v);
    return m;
}
double nice_max(const std::vector<const std::vector<double>*>& cols) {
    double m = -1e300;
    for (auto* c : cols)
        for (double v : *c) m = std::max(m, v);
    return m;
}

void write_svg(const std::string& path, const std::string& title,
               const std::vector<Series>& left, const std::vector<double>* price) {
    size_t n = left.front().y->size();
    std::vector<const std::vector<double>*> ycols;
    for (const auto& s : left) ycols.push_back(s.y);
    double ylo = nice_min(ycols), yhi = nice_max(ycols);
    if (yhi - ylo < 1e-12) {
        yhi += 1.0;
        ylo -= 1.0;
    }
    double plo = 0, phi = 1;
    if (price) {
        plo = nice_min({price});
        phi = nice_max({price});
        if (phi - plo < 1e-12) phi = plo + 1.0;
    }

    auto xpix = [&](size_t k) {
        return kMarginL + (kW - kMarginL - kMarginR) * static_cast<double>(k) /
                              std::max<size_t>(1, n - 1);
    };
    auto ypix = [&](double v) {
        return kMarginT + (kH - kMarginT - kMarginB) * (yhi - v) / (yhi - ylo);
    };
    auto ppix = [&](double v) {
        return kMarginT + (kH - kMarginT - kMarginB) * (phi - v) / (phi - plo);
    };

    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write plot: " + path);
    f.precision(8);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
    f << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    f << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
    // Axes.
    f << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
      << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << kMarginL << "\" y1=\"" << kH - kMarginB << "\" x2=\"" << kW - kMarginR
      << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << kMarginL - 6 << "\" y=\"" << kMarginT + 10
      << "\" text-anchor=\"end\" font-size=\"11\">" << yhi << "</text>\n";
    f << "<text x=\"" << kMarginL - 6 << "\" y=\"" << kH - kMarginB
      << "\" text-anchor=\"end\" font-size=\"11\">" << ylo << "</text>\n";
    f << "<text x=\"" << kW - kMarginR << "\" y=\"" << kH - kMarginB + 16
      << "\" text-anchor=\"end\" font-size=\"11\">step " << n - 1 << "</text>\n";

    if (price) {
        f << "<text x=\"" << kW - kMarginR + 6 << "\" y=\"" << kMarginT + 10
          << "\" font-size=\"11\" fill=\"gray\">" << phi << "</text>\n";
        f << "<text x=\"" << kW - kMarginR + 6 << "\" y=\"" << kH - kMarginB
          << "\" font-size=\"11\" fill=\"gray\">" << plo << "</text>\n";
        f << "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" points=\"";
        for (size_t k = 0; k < price->size(); ++k) f << xpix(k) << ',' << ppix((*price)[k]) << ' ';
        f << "\"/>\n";
    }
    int legend_x = kMarginL + 8;
    for (const auto& s : left) {
        f << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
        for (size_t k = 0; k < s.y->size(); ++k) f << xpix(k) << ',' << ypix((*s.y)[k]) << ' ';
        f << "\"/>\n";
        f << "<text x=\"" << legend_x << "\" y=\"" << kMarginT + 12 << "\" font-size=\"12\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
        legend_x += 90;
    }
    f << "</svg>\n";
}

const char* kColors[] = {"steelblue", "crimson", "seagreen", "darkorange", "purple"};

}  // namespace

void write_report(const std::vector<RunReport>& runs, const std::string& out_dir) {
    if (runs.empty()) throw std::invalid_argument("write_report: no runs");
    write_comparison_csv(runs, out_dir + "/comparison.csv");

    std::vector<std::vector<double>> power(runs.size()), charge(runs.size()), nch(runs.size()),
        qld(runs.size());
    std::vector<double> price, ref;
    for (size_t i = 0; i < runs.size(); ++i) {
        for (const auto& r : runs[i].trajectory) {
            power[i].push_back(r.out.P_tot);
            charge[i].push_back(r.x.S_twc);
            nch[i].push_back(r.u.n_ch);
            qld[i].push_back(r.out.q_L);
            if (i == 0) {
                price.push_back(r.rho);
                ref.push_back(r.q_L_ref);
            }
        }
    }
    auto series_for = [&](std::vector<std::vector<double>>& cols) {
        std::vector<Series> s;
        for (size_t i = 0; i < runs.size(); ++i)
            s.push_back({runs[i].name, kColors[i % 5], &cols[i]});
        return s;
    };
    write_svg(out_dir + "/power_vs_price.svg", "Total electric power (kW) and price",
              series_for(power), &price);
    write_svg(out_dir + "/s_twc_vs_price.svg", "Cold tank fraction and price", series_for(charge),
              &price);
    write_svg(out_dir + "/n_ch_vs_price.svg", "Active chillers and price", series_for(nch),
              &price);
    auto tracking = series_for(qld);
    tracking.push_back({"reference", "black", &ref});
    write_svg(out_dir + "/load_tracking.svg", "Cooling load tracking (kW)", tracking, nullptr);
}

}  // namespace dcep
