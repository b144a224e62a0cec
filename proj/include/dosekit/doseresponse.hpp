#pragma once

// Hill-type dose-response fitting, baseline curve families and the reports
// built from them.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dosekit::doseresponse {

enum class DoseScale { fraction, percent };

std::string scale_name(DoseScale s);
DoseScale parse_scale(std::string_view s);

struct DoseResponsePoint {
    double p = 0.0;
    double q = 0.0;
    std::optional<std::uint64_t> n_obs;
    std::string label;
};

// Both p and q use the same declared scale.
struct PointSet {
    DoseScale scale = DoseScale::fraction;
    std::vector<DoseResponsePoint> points;
};

void validate_points(const PointSet& ps);

// CSV `label,p,q,n_obs` (n_obs may be empty); `# scale: percent` or
// `# scale: fraction` declares units, fraction when absent.
PointSet parse_points(std::string_view text);
PointSet read_points(const std::string& path);
std::string format_points(const PointSet& ps);

struct NelderMeadOptions {
    double tolerance = 1e-9;        // simplex size, max-norm from the best vertex
    std::size_t max_evaluations = 20000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::span<const double> steps, const NelderMeadOptions& opts = {});

struct HillParams {
    double q0 = 0.0;
    double dmax = 0.0;
    double ec50 = 1.0;
    double n = 1.0;
};

double hill(const HillParams& h, double p);

struct HillFit {
    HillParams params;
    DoseScale scale = DoseScale::fraction;
    std::optional<double> r2;  // empty when undefined
    bool r2_degenerate = false;
    double ss_res = 0.0;
    std::vector<double> residuals;  // observed - fitted
    bool converged = false;
    std::size_t start_index = 0;
    std::size_t starts = 0;
    std::size_t evaluations = 0;
    std::size_t n_points = 0;
    std::vector<std::string> warnings;
};

struct HillOptions {
    bool weighted = false;        // weight squared residuals by n_obs
    std::optional<double> fixed_n;
    std::vector<HillParams> extra_starts;  // tried after the built-in grid
    NelderMeadOptions optimizer;
};

HillFit fit_hill(const PointSet& ps, const HillOptions& opts = {});

// Throws Error{not_converged} for an unconverged fit.
double predict(const HillFit& fit, double p);

struct BaselineFit {
    std::string model;  // linear | sqrt | loglinear
    double a = 0.0;
    double b = 0.0;
    std::optional<double> r2;
    bool degenerate = false;  // all transformed doses equal; slope fixed at 0
    std::vector<double> residuals;
};

double baseline_value(const BaselineFit& fit, double p);
std::vector<BaselineFit> fit_baselines(const PointSet& ps);

struct ModelEntry {
    std::string model;
    std::optional<double> r2;
    std::vector<double> residuals;
};

struct ModelComparison {
    std::vector<ModelEntry> ranking;  // best r2 first, undefined last
};

ModelComparison compare_models(const std::optional<HillFit>& hill, std::span<const BaselineFit> baselines);

// {scale, n_points, models: [{model, params, r2, residuals, converged, n_points}], ranking}
std::string fit_report_json(const PointSet& ps, const HillFit& hill, std::span<const BaselineFit> baselines,
                            const ModelComparison& cmp);

// Scatter of the observations with the fitted Hill curve and baseline overlays.
std::string plot_svg(const PointSet& ps, const HillFit& hill, std::span<const BaselineFit> baselines);
// CSV `label,dose,observed,hill,<baseline models...>`.
std::string plot_data(const PointSet& ps, const HillFit& hill, std::span<const BaselineFit> baselines);

}  // namespace dosekit::doseresponse
