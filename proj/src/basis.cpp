#include "dcep/basis.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dcep {

using Eigen::VectorXd;

Eigen::Matrix<double, 12, 1> RlState::to_vector() const {
    Eigen::Matrix<double, 12, 1> v;
    v.head<8>() = plant.to_vector();
    v[8] = T_oawb;
    v[9] = q_L_ref;
    v[10] = rho;
    v[11] = rho_bar;
    return v;
}

namespace {
// Indices into the joint vector (see the header comment).
enum : int {
    iT_lwr = 0,
    iS_tww = 1,
    iS_twc = 2,
    iT_twc = 3,
    iT_tww = 4,
    iT_chws = 5,
    iT_cwr = 6,
    iT_cws = 7,
    iT_oawb = 8,
    iQ_ref = 9,
    iRho = 10,
    iRhoBar = 11,
    iM_lw = 12,
    iM_tw = 13,
    iN_ch = 14,
    iM_cw = 15,
    iM_oa = 16,
};
}  // namespace

BasisSpec BasisSpec::standard() {
    BasisSpec s;
    // Squares of every retained component (S_tww and T_tww dropped).
    for (int i : {iT_lwr, iS_twc, iT_twc, iT_chws, iT_cwr, iT_cws, iT_oawb, iQ_ref, iRho, iRhoBar,
                  iM_lw, iM_tw, iN_ch, iM_cw, iM_oa})
        s.terms.emplace_back(i, i);
    // Chilled-water loop couplings.
    s.terms.emplace_back(iT_lwr, iM_lw);
    s.terms.emplace_back(iT_lwr, iQ_ref);
    s.terms.emplace_back(iT_lwr, iM_tw);
    s.terms.emplace_back(iS_twc, iM_tw);
    s.terms.emplace_back(iT_twc, iM_tw);
    s.terms.emplace_back(iT_chws, iM_lw);
    s.terms.emplace_back(iT_chws, iM_tw);
    s.terms.emplace_back(iT_chws, iN_ch);
    s.terms.emplace_back(iQ_ref, iM_lw);
    s.terms.emplace_back(iQ_ref, iN_ch);
    s.terms.emplace_back(iM_lw, iM_tw);
    s.terms.emplace_back(iM_lw, iN_ch);
    s.terms.emplace_back(iM_tw, iN_ch);
    // Cooling-water loop couplings.
    s.terms.emplace_back(iT_cwr, iM_cw);
    s.terms.emplace_back(iT_cwr, iM_oa);
    s.terms.emplace_back(iT_cws, iM_cw);
    s.terms.emplace_back(iT_cws, iM_oa);
    s.terms.emplace_back(iT_oawb, iM_cw);
    s.terms.emplace_back(iT_oawb, iM_oa);
    // Price-driven storage use.
    s.terms.emplace_back(iRho, iM_tw);
    s.terms.emplace_back(iRhoBar, iM_tw);

    s.scales.resize(kJointDim);
    s.scales << 12.0, 0.5, 0.5, 7.0, 13.0, 7.0, 32.0, 29.0, 26.0, 1313.0, 0.08, 0.08,
        120.0, 30.0, 3.5, 160.0, 5.0;
    s.validate();
    return s;
}

void BasisSpec::validate() const {
    if (terms.size() != kBasisSize)
        throw std::invalid_argument("basis must have exactly " + std::to_string(kBasisSize) +
                                    " terms, got " + std::to_string(terms.size()));
    if (scales.size() != kJointDim) throw std::invalid_argument("basis scales must have 17 entries");
    for (int i = 0; i < scales.size(); ++i)
        if (!(scales[i] > 0)) throw std::invalid_argument("basis scales must be positive");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : terms) {
        if (i < 0 || j < 0 || i >= kJointDim || j >= kJointDim || i > j)
            throw std::invalid_argument("basis term indices must satisfy 0 <= i <= j < 17");
        if (!seen.insert({i, j}).second) throw std::invalid_argument("duplicate basis term");
    }
}

Eigen::Matrix<double, kJointDim, 1> BasisSpec::normalized(const RlState& x,
                                                          const ControlInput& u) const {
    Eigen::Matrix<double, kJointDim, 1> z;
    z.head<12>() = x.to_vector();
    z[12] = u.m_lw;
    z[13] = u.m_tw;
    z[14] = static_cast<double>(u.n_ch);
    z[15] = u.m_cw;
    z[16] = u.m_oa;
    return z.cwiseQuotient(scales);
}

SymmetricEmbedding BasisSpec::embedding() const {
    SymmetricEmbedding e;
    e.dim = kJointDim;
    e.terms = terms;
    return e;
}

VectorXd features(const RlState& x, const ControlInput& u, const BasisSpec& spec) {
    auto z = spec.normalized(x, u);
    VectorXd f(spec.terms.size());
    for (size_t l = 0; l < spec.terms.size(); ++l)
        f[l] = z[spec.terms[l].first] * z[spec.terms[l].second];
    return f;
}

double q_value(const VectorXd& theta, const RlState& x, const ControlInput& u,
               const BasisSpec& spec) {
    return theta.dot(features(x, u, spec));
}

Eigen::MatrixXd theta_matrix(const VectorXd& theta, const BasisSpec& spec) {
    return spec.embedding().matrix(theta);
}

VectorXd initial_theta(const BasisSpec& spec, double diag_value) {
    VectorXd th = VectorXd::Zero(spec.terms.size());
    for (size_t l = 0; l < spec.terms.size(); ++l)
        if (spec.terms[l].first == spec.terms[l].second) th[l] = diag_value;
    return th;
}

void BasisSpec::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write basis manifest: " + path);
    f << "i,j,scale_i,scale_j\n";
    for (auto [i, j] : terms) f << i << ',' << j << ',' << scales[i] << ',' << scales[j] << '\n';
}

BasisSpec BasisSpec::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open basis manifest: " + path);
    BasisSpec s = standard();  // scales default to the shipped references
    s.terms.clear();
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int i, j;
        char comma;
        double si, sj;
        if (!(ss >> i >> comma >> j >> comma >> si >> comma >> sj))
            throw std::runtime_error("bad basis manifest line: " + line);
        s.terms.emplace_back(i, j);
        s.scales[i] = si;
        s.scales[j] = sj;
    }
    s.validate();
    return s;
}

void save_theta_csv(const VectorXd& theta, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write theta file: " + path);
    f << "index,value\n";
    f.precision(17);
    for (int i = 0; i < theta.size(); ++i) f << i << ',' << theta[i] << '\n';
}

VectorXd load_theta_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open theta file: " + path);
    std::string line;
    std::getline(f, line);
    std::vector<double> vals;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int idx;
        char comma;
        double v;
        if (!(ss >> idx >> comma >> v)) throw std::runtime_error("bad theta line: " + line);
        vals.push_back(v);
    }
    return Eigen::Map<VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

}  // namespace dcep
