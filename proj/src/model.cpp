#include "afcdlcz/model.hpp"

#include <cmath>
#include <string>

namespace afcdlcz::model {

namespace {
void require_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string("model: ") + name + " must be in [0,1]");
}
} // namespace

void ModelParams::validate() const {
    require_prob(p_s, "p_s");
    require_prob(eta_r, "eta_r");
    require_prob(beta, "beta");
    require_prob(p_n, "p_n");
    if (!(bin_width_ns > 0.0)) throw ConfigError("model: bin_width_ns must be > 0");
}

void BetaInputs::validate() const {
    if (!(t1_ms > 0.0)) throw ConfigError("model: t1_ms must be > 0");
    if (t_spin_ms < 0.0) throw ConfigError("model: t_spin_ms must be >= 0");
    require_prob(gamma_es, "gamma_es");
    require_prob(gamma_eg, "gamma_eg");
    if (gamma_es + gamma_eg > 1.0 + 1e-12)
        throw ConfigError("model: gamma_es + gamma_eg must be <= 1");
    require_prob(eta_t, "eta_t");
}

double g_model(const ModelParams& params) {
    params.validate();
    const double denom = (params.eta_r + params.beta) * params.p_s + params.p_n;
    if (denom <= 0.0) throw DomainError("g_model: zero denominator");
    return 1.0 + params.eta_r / denom;
}

double compute_beta(const BetaInputs& in) {
    in.validate();
    const double half = std::exp(-in.t_spin_ms / (2.0 * in.t1_ms));
    const double full = std::exp(-in.t_spin_ms / in.t1_ms);
    return (1.0 - half) * (in.gamma_es + half * in.gamma_eg) * in.eta_t
           + (1.0 - in.eta_t) * in.gamma_es * full;
}

ModelCurve model_curve(const std::vector<double>& p_s_grid, double eta_r,
                       double beta, double p_n, double bin_width_ns) {
    if (p_s_grid.empty()) throw DomainError("model_curve: empty p_s grid");
    ModelCurve curve;
    curve.params = {0.0, eta_r, beta, p_n, bin_width_ns};
    curve.points.reserve(p_s_grid.size());
    for (double p_s : p_s_grid) {
        ModelParams p = curve.params;
        p.p_s = p_s;
        curve.points.emplace_back(p_s, g_model(p));
    }
    return curve;
}

ChiSquare compare_model_to_analysis(const ModelCurve& curve,
                                    const std::vector<MeasuredPoint>& measured) {
    if (measured.empty()) throw DomainError("compare_model_to_analysis: no measured points");
    ChiSquare result;
    result.pulls.reserve(measured.size());
    for (const auto& m : measured) {
        if (!(m.sigma > 0.0)) throw DomainError("compare_model_to_analysis: sigma must be > 0");
        ModelParams p = curve.params;
        p.p_s = m.p_s;
        const double pull = (m.g - g_model(p)) / m.sigma;
        result.pulls.push_back(pull);
        result.chi2 += pull * pull;
    }
    result.dof = static_cast<int>(measured.size());
    return result;
}

double gaussian_window_fraction(double fwhm, double window_width) {
    if (!(fwhm > 0.0) || !(window_width > 0.0))
        throw DomainError("gaussian_window_fraction: non-positive input");
    const double sigma = fwhm / 2.3548200450309493;
    return std::erf(0.5 * window_width / (sigma * std::sqrt(2.0)));
}

} // namespace afcdlcz::model
