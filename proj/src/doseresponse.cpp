#include "dosekit/doseresponse.hpp"

#include "dosekit/error.hpp"
#include "dosekit/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace dosekit::doseresponse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_equal(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Weighted R^2. Empty when the data are constant but the fit is not.
std::pair<std::optional<double>, bool> r_squared(const std::vector<double>& obs, const std::vector<double>& fitted,
                                                 const std::vector<double>& w) {
    double sw = 0.0, mean = 0.0, ss_res = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sw += w[i];
        mean += w[i] * obs[i];
        scale += w[i] * obs[i] * obs[i];
    }
    mean /= sw;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ss_res += w[i] * (obs[i] - fitted[i]) * (obs[i] - fitted[i]);
        ss_tot += w[i] * (obs[i] - mean) * (obs[i] - mean);
    }
    if (all_equal(obs)) {
        if (ss_res <= 1e-24 * std::max(scale, 1.0)) return {1.0, true};
        return {std::nullopt, true};
    }
    return {1.0 - ss_res / ss_tot, false};
}

double quantile_linear(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

double transform(const std::string& model, double p) {
    if (model == "linear") return p;
    if (model == "sqrt") return std::sqrt(p);
    return std::log1p(p);
}

}  // namespace

std::string scale_name(DoseScale s) {
    return s == DoseScale::percent ? "percent" : "fraction";
}

DoseScale parse_scale(std::string_view s) {
    if (s == "percent") return DoseScale::percent;
    if (s == "fraction") return DoseScale::fraction;
    throw Error(ErrorKind::parse, "unknown scale '" + std::string(s) + "'");
}

void validate_points(const PointSet& ps) {
    const double top = ps.scale == DoseScale::percent ? 100.0 : 1.0;
    for (const auto& pt : ps.points) {
        if (!(pt.p >= 0.0) || !std::isfinite(pt.p)) {
            throw Error(ErrorKind::invalid_argument, "dose must be finite and >= 0 (point '" + pt.label + "')");
        }
        if (!(pt.q >= 0.0 && pt.q <= top)) {
            throw Error(ErrorKind::invalid_argument, "response outside [0, " + format_double(top) + "] (point '" +
                                                         pt.label + "')");
        }
        if (pt.p > top) {
            throw Error(ErrorKind::invalid_argument, "dose above " + format_double(top) + " (point '" + pt.label + "')");
        }
    }
}

PointSet parse_points(std::string_view text) {
    PointSet ps;
    bool header = false;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string body = trim(std::string_view(line).substr(1));
            if (body.rfind("scale:", 0) == 0) {
                try {
                    ps.scale = parse_scale(trim(std::string_view(body).substr(6)));
                } catch (const Error& e) {
                    throw Error(ErrorKind::parse, e.what(), line_no);
                }
            }
            continue;
        }
        if (!header) {
            if (line != "label,p,q,n_obs") throw Error(ErrorKind::parse, "expected header label,p,q,n_obs", line_no);
            header = true;
            continue;
        }
        auto f = split(line);
        if (f.size() != 4) throw Error(ErrorKind::parse, "expected 4 fields", line_no);
        try {
            DoseResponsePoint pt;
            pt.label = trim(f[0]);
            pt.p = parse_double(trim(f[1]), "p");
            pt.q = parse_double(trim(f[2]), "q");
            if (!trim(f[3]).empty()) {
                const auto n = parse_int(trim(f[3]), "n_obs");
                if (n < 1) throw Error(ErrorKind::parse, "n_obs must be positive");
                pt.n_obs = static_cast<std::uint64_t>(n);
            }
            ps.points.push_back(std::move(pt));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, e.what(), line_no);
        }
    }
    validate_points(ps);
    return ps;
}

PointSet read_points(const std::string& path) {
    return parse_points(read_file(path));
}

std::string format_points(const PointSet& ps) {
    std::string out = "# scale: " + scale_name(ps.scale) + "\nlabel,p,q,n_obs\n";
    for (const auto& pt : ps.points) {
        out += pt.label + "," + format_double(pt.p) + "," + format_double(pt.q) + "," +
               (pt.n_obs ? std::to_string(*pt.n_obs) : std::string()) + "\n";
    }
    return out;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::span<const double> steps, const NelderMeadOptions& opts) {
    const std::size_t d = x0.size();
    if (d == 0 || steps.size() != d) throw Error(ErrorKind::invalid_argument, "nelder_mead needs one step per coordinate");
    NelderMeadResult res;
    const auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? kInf : v;
    };

    std::vector<std::vector<double>> v(d + 1, x0);
    for (std::size_t i = 0; i < d; ++i) v[i + 1][i] += steps[i];
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(v[i]);

    std::vector<std::size_t> order(d + 1);
    std::vector<double> c(d), xr(d), xe(d), xc(d);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        {
            std::vector<std::vector<double>> sv;
            std::vector<double> sf;
            for (auto i : order) {
                sv.push_back(std::move(v[i]));
                sf.push_back(fv[i]);
            }
            v = std::move(sv);
            fv = std::move(sf);
        }
        double size = 0.0;
        for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t j = 0; j < d; ++j) size = std::max(size, std::abs(v[i][j] - v[0][j]));
        }
        if (size < opts.tolerance) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opts.max_evaluations) break;

        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) c[j] += v[i][j] / static_cast<double>(d);
        }
        const auto& worst = v[d];
        for (std::size_t j = 0; j < d; ++j) xr[j] = c[j] + (c[j] - worst[j]);
        const double fr = eval(xr);
        if (fr < fv[0]) {
            for (std::size_t j = 0; j < d; ++j) xe[j] = c[j] + 2.0 * (c[j] - worst[j]);
            const double fe = eval(xe);
            if (fe < fr) {
                v[d] = xe;
                fv[d] = fe;
            } else {
                v[d] = xr;
                fv[d] = fr;
            }
            continue;
        }
        if (fr < fv[d - 1]) {
            v[d] = xr;
            fv[d] = fr;
            continue;
        }
        bool accepted = false;
        if (fr < fv[d]) {
            for (std::size_t j = 0; j < d; ++j) xc[j] = c[j] + 0.5 * (xr[j] - c[j]);
            const double fc = eval(xc);
            if (fc <= fr) {
                v[d] = xc;
                fv[d] = fc;
                accepted = true;
            }
        } else {
            for (std::size_t j = 0; j < d; ++j) xc[j] = c[j] + 0.5 * (worst[j] - c[j]);
            const double fc = eval(xc);
            if (fc < fv[d]) {
                v[d] = xc;
                fv[d] = fc;
                accepted = true;
            }
        }
        if (!accepted) {
            for (std::size_t i = 1; i <= d; ++i) {
                for (std::size_t j = 0; j < d; ++j) v[i][j] = v[0][j] + 0.5 * (v[i][j] - v[0][j]);
                fv[i] = eval(v[i]);
            }
        }
    }
    res.x = v[0];
    res.fx = fv[0];
    return res;
}

double hill(const HillParams& h, double p) {
    if (p <= 0.0) return h.q0;
    const double r = std::pow(p / h.ec50, h.n);
    const double frac = std::isinf(r) ? 1.0 : r / (1.0 + r);
    return h.q0 + h.dmax * frac;
}

HillFit fit_hill(const PointSet& ps, const HillOptions& opts) {
    validate_points(ps);
    const auto& pts = ps.points;
    if (pts.size() < 4) throw Error(ErrorKind::invalid_argument, "Hill fit needs at least 4 points");
    if (opts.fixed_n && !(*opts.fixed_n > 0.0)) throw Error(ErrorKind::invalid_argument, "fixed n must be positive");

    std::vector<double> ps_, qs, w;
    for (const auto& pt : pts) {
        ps_.push_back(pt.p);
        qs.push_back(pt.q);
        if (opts.weighted) {
            if (!pt.n_obs) throw Error(ErrorKind::invalid_argument, "weighted fit needs n_obs on every point");
            w.push_back(static_cast<double>(*pt.n_obs));
        } else {
            w.push_back(1.0);
        }
    }

    HillFit fit;
    fit.scale = ps.scale;
    fit.n_points = pts.size();

    std::vector<double> positive;
    for (double p : ps_) {
        if (p > 0.0) positive.push_back(p);
    }
    const double max_p = *std::max_element(ps_.begin(), ps_.end());
    const double min_p = *std::min_element(ps_.begin(), ps_.end());
    if (min_p > 0.01 * max_p) fit.warnings.push_back("no observation at or near zero dose; q0 is extrapolated");
    if (positive.empty()) fit.warnings.push_back("no positive doses; ec50 and n are unidentified");

    const auto finish = [&](const HillParams& h) {
        fit.params = h;
        std::vector<double> fitted;
        fit.ss_res = 0.0;
        fit.residuals.clear();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            fitted.push_back(hill(h, ps_[i]));
            fit.residuals.push_back(qs[i] - fitted.back());
            fit.ss_res += w[i] * fit.residuals.back() * fit.residuals.back();
        }
        const auto [r2, degenerate] = r_squared(qs, fitted, w);
        fit.r2 = r2;
        fit.r2_degenerate = degenerate;
    };

    const double q_min = *std::min_element(qs.begin(), qs.end());
    const double q_max = *std::max_element(qs.begin(), qs.end());
    if (all_equal(qs)) {
        HillParams h{qs.front(), 0.0, positive.empty() ? 1.0 : quantile_linear(positive, 0.5), opts.fixed_n.value_or(1.0)};
        fit.converged = true;
        fit.starts = 0;
        fit.warnings.push_back("constant response; dmax fixed at 0");
        finish(h);
        return fit;
    }

    const bool free_n = !opts.fixed_n;
    const auto unpack = [&](std::span<const double> x) {
        HillParams h;
        h.q0 = std::max(x[0], 0.0);
        h.dmax = std::max(x[1], 0.0);
        h.ec50 = std::exp(x[2]);
        h.n = free_n ? std::exp(x[3]) : *opts.fixed_n;
        return h;
    };
    const auto objective = [&](std::span<const double> x) {
        const HillParams h = unpack(x);
        double ss = 0.0;
        for (std::size_t i = 0; i < ps_.size(); ++i) {
            const double r = qs[i] - hill(h, ps_[i]);
            ss += w[i] * r * r;
        }
        const double neg_q0 = std::min(x[0], 0.0), neg_dmax = std::min(x[1], 0.0);
        return ss + neg_q0 * neg_q0 + neg_dmax * neg_dmax;
    };

    std::vector<HillParams> starts;
    const std::vector<double> ec50_grid =
        positive.empty() ? std::vector<double>{1.0}
                         : std::vector<double>{quantile_linear(positive, 0.25), quantile_linear(positive, 0.5),
                                               quantile_linear(positive, 0.75)};
    for (double ec : ec50_grid) {
        for (double n : {0.8, 1.0, 1.5, 2.0}) starts.push_back({q_min, q_max - q_min, ec, n});
    }
    starts.insert(starts.end(), opts.extra_starts.begin(), opts.extra_starts.end());

    const double range = q_max - q_min;
    const double q_step = 0.1 * std::max(range, 1e-3 * std::max(std::abs(q_max), 1e-12));
    std::vector<double> steps{q_step, q_step, 0.5};
    if (free_n) steps.push_back(0.3);

    bool have_best = false, any_converged = false;
    double best_ss = kInf;
    HillParams best;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const auto& st = starts[s];
        if (!(st.ec50 > 0.0) || !(st.n > 0.0)) throw Error(ErrorKind::invalid_argument, "start with nonpositive ec50 or n");
        std::vector<double> x0{st.q0, st.dmax, std::log(st.ec50)};
        if (free_n) x0.push_back(std::log(st.n));
        const auto r = nelder_mead(objective, x0, steps, opts.optimizer);
        fit.evaluations += r.evaluations;
        any_converged = any_converged || r.converged;
        if (!have_best || r.fx < best_ss) {
            have_best = true;
            best_ss = r.fx;
            best = unpack(r.x);
            fit.start_index = s;
        }
    }
    fit.starts = starts.size();
    fit.converged = any_converged;
    if (!any_converged) fit.warnings.push_back("no start converged; parameters are best effort");
    finish(best);
    return fit;
}

double predict(const HillFit& fit, double p) {
    if (!fit.converged) throw Error(ErrorKind::not_converged, "refusing to predict from an unconverged fit");
    if (!(p >= 0.0)) throw Error(ErrorKind::invalid_argument, "dose must be >= 0");
    return hill(fit.params, p);
}

double baseline_value(const BaselineFit& fit, double p) {
    return fit.a + fit.b * transform(fit.model, p);
}

std::vector<BaselineFit> fit_baselines(const PointSet& ps) {
    validate_points(ps);
    if (ps.points.size() < 2) throw Error(ErrorKind::invalid_argument, "baseline fits need at least 2 points");
    std::vector<double> qs;
    for (const auto& pt : ps.points) qs.push_back(pt.q);
    const std::vector<double> w(qs.size(), 1.0);
    const double n = static_cast<double>(qs.size());
    const double qbar = std::accumulate(qs.begin(), qs.end(), 0.0) / n;

    std::vector<BaselineFit> out;
    for (const std::string model : {"linear", "sqrt", "loglinear"}) {
        BaselineFit b;
        b.model = model;
        std::vector<double> x;
        for (const auto& pt : ps.points) x.push_back(transform(model, pt.p));
        const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxx += (x[i] - xbar) * (x[i] - xbar);
            sxy += (x[i] - xbar) * (qs[i] - qbar);
        }
        if (all_equal(x)) {
            b.degenerate = true;
            b.b = 0.0;
        } else {
            b.b = sxy / sxx;
        }
        b.a = qbar - b.b * xbar;
        std::vector<double> fitted;
        for (std::size_t i = 0; i < x.size(); ++i) {
            fitted.push_back(b.a + b.b * x[i]);
            b.residuals.push_back(qs[i] - fitted.back());
        }
        b.r2 = r_squared(qs, fitted, w).first;
        out.push_back(std::move(b));
    }
    return out;
}

ModelComparison compare_models(const std::optional<HillFit>& hill_fit, std::span<const BaselineFit> baselines) {
    ModelComparison cmp;
    if (hill_fit) cmp.ranking.push_back({"hill", hill_fit->r2, hill_fit->residuals});
    for (const auto& b : baselines) cmp.ranking.push_back({b.model, b.r2, b.residuals});
    std::stable_sort(cmp.ranking.begin(), cmp.ranking.end(), [](const ModelEntry& a, const ModelEntry& b) {
        if (a.r2.has_value() != b.r2.has_value()) return a.r2.has_value();
        return a.r2 && *a.r2 > *b.r2;
    });
    return cmp;
}

std::string fit_report_json(const PointSet& ps, const HillFit& h, std::span<const BaselineFit> baselines,
                            const ModelComparison& cmp) {
    using ojson = nlohmann::ordered_json;
    const auto r2_json = [](const std::optional<double>& r2) { return r2 ? ojson(*r2) : ojson(nullptr); };
    ojson report;
    report["scale"] = scale_name(ps.scale);
    report["n_points"] = ps.points.size();
    ojson labels = ojson::array();
    for (const auto& pt : ps.points) labels.push_back(pt.label);
    report["labels"] = labels;

    ojson models = ojson::array();
    ojson hm;
    hm["model"] = "hill";
    hm["params"] = {{"q0", h.params.q0}, {"dmax", h.params.dmax}, {"ec50", h.params.ec50}, {"n", h.params.n}};
    hm["r2"] = r2_json(h.r2);
    hm["residuals"] = h.residuals;
    hm["converged"] = h.converged;
    hm["n_points"] = h.n_points;
    hm["ss_res"] = h.ss_res;
    hm["starts"] = h.starts;
    hm["winning_start"] = h.start_index;
    hm["warnings"] = h.warnings;
    models.push_back(hm);
    for (const auto& b : baselines) {
        ojson bm;
        bm["model"] = b.model;
        bm["params"] = {{"a", b.a}, {"b", b.b}};
        bm["r2"] = r2_json(b.r2);
        bm["residuals"] = b.residuals;
        bm["converged"] = true;
        bm["n_points"] = b.residuals.size();
        bm["degenerate"] = b.degenerate;
        models.push_back(bm);
    }
    report["models"] = models;
    ojson ranking = ojson::array();
    for (const auto& e : cmp.ranking) ranking.push_back({{"model", e.model}, {"r2", r2_json(e.r2)}});
    report["ranking"] = ranking;
    return report.dump(2) + "\n";
}

std::string plot_data(const PointSet& ps, const HillFit& h, std::span<const BaselineFit> baselines) {
    std::string out = "label,dose,observed,hill";
    for (const auto& b : baselines) out += "," + b.model;
    out += "\n";
    for (const auto& pt : ps.points) {
        out += pt.label + "," + format_double(pt.p) + "," + format_double(pt.q) + "," + format_double(hill(h.params, pt.p));
        for (const auto& b : baselines) out += "," + format_double(baseline_value(b, pt.p));
        out += "\n";
    }
    return out;
}

std::string plot_svg(const PointSet& ps, const HillFit& h, std::span<const BaselineFit> baselines) {
    const double width = 640, height = 420, left = 64, right = 150, top = 24, bottom = 48;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_max = 0.0, y_min = kInf, y_max = -kInf;
    for (const auto& pt : ps.points) {
        x_max = std::max(x_max, pt.p);
        y_min = std::min(y_min, pt.q);
        y_max = std::max(y_max, pt.q);
    }
    x_max = x_max > 0.0 ? x_max * 1.05 : 1.0;
    constexpr int kSamples = 120;
    const auto sample_x = [&](int i) { return x_max * i / kSamples; };
    for (int i = 0; i <= kSamples; ++i) {
        const double y = hill(h.params, sample_x(i));
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    }
    const double pad = y_max > y_min ? 0.08 * (y_max - y_min) : std::max(1e-3, 0.05 * std::abs(y_max));
    y_min -= pad;
    y_max += pad;
    const auto sx = [&](double x) { return left + pw * x / x_max; };
    const auto sy = [&](double y) { return top + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(top + ph, 1) + "\" x2=\"" + fixed(left + pw, 1) +
         "\" y2=\"" + fixed(top + ph, 1) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(top, 1) + "\" x2=\"" + fixed(left, 1) + "\" y2=\"" +
         fixed(top + ph, 1) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x_max * i / 5.0, yv = y_min + (y_max - y_min) * i / 5.0;
        s += "<text x=\"" + fixed(sx(xv), 1) + "\" y=\"" + fixed(top + ph + 16, 1) + "\" text-anchor=\"middle\">" +
             fixed(xv, 3) + "</text>\n";
        s += "<text x=\"" + fixed(left - 6, 1) + "\" y=\"" + fixed(sy(yv) + 4, 1) + "\" text-anchor=\"end\">" +
             fixed(yv, 3) + "</text>\n";
    }
    const std::string unit = ps.scale == DoseScale::percent ? " (%)" : "";
    s += "<text x=\"" + fixed(left + pw / 2, 1) + "\" y=\"" + fixed(height - 8, 1) +
         "\" text-anchor=\"middle\">contamination dose p" + unit + "</text>\n";
    s += "<text x=\"14\" y=\"" + fixed(top + ph / 2, 1) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         fixed(top + ph / 2, 1) + ")\">unsafe output rate q" + unit + "</text>\n";

    const auto polyline = [&](const std::function<double(double)>& f, const std::string& colour, bool dashed) {
        std::string pts;
        for (int i = 0; i <= kSamples; ++i) {
            const double y = std::clamp(f(sample_x(i)), y_min, y_max);
            pts += (i ? " " : "") + fixed(sx(sample_x(i)), 2) + "," + fixed(sy(y), 2);
        }
        return "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"" + (dashed ? "1.2" : "2") + "\"" +
               (dashed ? " stroke-dasharray=\"5,4\"" : "") + " points=\"" + pts + "\"/>\n";
    };
    static const char* colours[] = {"#d95f02", "#7570b3", "#1b9e77", "#e7298a"};
    for (std::size_t i = 0; i < baselines.size(); ++i) {
        const auto& b = baselines[i];
        s += polyline([&](double x) { return baseline_value(b, x); }, colours[i % 4], true);
    }
    s += polyline([&](double x) { return hill(h.params, x); }, "black", false);
    for (const auto& pt : ps.points) {
        s += "<circle cx=\"" + fixed(sx(pt.p), 2) + "\" cy=\"" + fixed(sy(pt.q), 2) +
             "\" r=\"4\" fill=\"#377eb8\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }

    double ly = top + 10;
    const double lx = left + pw + 16;
    const auto legend = [&](const std::string& label, const std::string& colour, bool dashed) {
        s += "<line x1=\"" + fixed(lx, 1) + "\" y1=\"" + fixed(ly, 1) + "\" x2=\"" + fixed(lx + 22, 1) + "\" y2=\"" +
             fixed(ly, 1) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"" +
             (dashed ? " stroke-dasharray=\"5,4\"" : "") + "/>\n";
        s += "<text x=\"" + fixed(lx + 28, 1) + "\" y=\"" + fixed(ly + 4, 1) + "\">" + label + "</text>\n";
        ly += 18;
    };
    const auto r2_text = [](const std::optional<double>& r2) { return r2 ? fixed(*r2, 3) : std::string("n/a"); };
    legend("hill R2=" + r2_text(h.r2), "black", false);
    for (std::size_t i = 0; i < baselines.size(); ++i) {
        legend(baselines[i].model + " R2=" + r2_text(baselines[i].r2), colours[i % 4], true);
    }
    s += "</svg>\n";
    return s;
}

}  // namespace dosekit::doseresponse
