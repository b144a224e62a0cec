#include "dosekit/stats.hpp"

#include "dosekit/error.hpp"
#include "dosekit/text.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dosekit::stats {

namespace {

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::invalid_argument, "ci_level must lie in (0, 1)");
}

double pooled_z(double x1, double n1, double x2, double n2) {
    const double pool = (x1 + x2) / (n1 + n2);
    const double se = std::sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2));
    return se > 0.0 ? (x1 / n1 - x2 / n2) / se : 0.0;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double normal_quantile(double prob) {
    return boost::math::quantile(boost::math::normal_distribution<>(), prob);
}

double normal_two_sided_p(double z) {
    const double p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), std::abs(z)));
    return std::min(1.0, p);
}

double student_t_quantile(double prob, double df) {
    return boost::math::quantile(boost::math::students_t_distribution<>(df), prob);
}

double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    const double p =
        2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<>(df), std::abs(t)));
    return std::min(1.0, p);
}

RateEstimate rate(std::uint64_t unsafe_count, std::uint64_t total, double ci_level) {
    if (total == 0) throw Error(ErrorKind::invalid_argument, "rate needs total >= 1");
    if (unsafe_count > total) throw Error(ErrorKind::invalid_argument, "unsafe count exceeds total");
    check_level(ci_level);
    RateEstimate r;
    r.unsafe_count = unsafe_count;
    r.total = total;
    r.ci_level = ci_level;
    r.rate = static_cast<double>(unsafe_count) / static_cast<double>(total);
    const double n = static_cast<double>(total);
    const double z = normal_quantile(0.5 + ci_level / 2.0);
    const double z2 = z * z;
    const double centre = (r.rate + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z / (1.0 + z2 / n) * std::sqrt(r.rate * (1.0 - r.rate) / n + z2 / (4.0 * n * n));
    r.ci_low = std::clamp(centre - half, 0.0, r.rate);
    r.ci_high = std::clamp(centre + half, r.rate, 1.0);
    return r;
}

double amplification(double q, double p) {
    if (p == 0.0) throw Error(ErrorKind::undefined, "amplification undefined at p = 0");
    if (!(p > 0.0)) throw Error(ErrorKind::invalid_argument, "p must be positive");
    return q / p;
}

TestResult two_proportion_test(Proportion a, Proportion b, const TestOptions& opts) {
    if (a.total == 0 || b.total == 0) throw Error(ErrorKind::invalid_argument, "both totals must be >= 1");
    if (a.unsafe > a.total || b.unsafe > b.total) throw Error(ErrorKind::invalid_argument, "count exceeds total");
    const double n1 = static_cast<double>(a.total), n2 = static_cast<double>(b.total);
    const double x1 = static_cast<double>(a.unsafe), x2 = static_cast<double>(b.unsafe);
    TestResult r;
    const std::uint64_t pooled_unsafe = a.unsafe + b.unsafe;
    if (pooled_unsafe == 0 || pooled_unsafe == a.total + b.total) {
        r.z = 0.0;
        r.p_value = 1.0;
        r.method = "degenerate";
        return r;
    }
    r.z = pooled_z(x1, n1, x2, n2);
    if (a.total > opts.exact_max_total || b.total > opts.exact_max_total) {
        r.p_value = normal_two_sided_p(r.z);
        r.method = "pooled_z";
        return r;
    }
    r.method = "exact_unconditional";
    if (r.z == 0.0) {
        // Every table reaches |z| >= 0; skip the enumeration and its rounding.
        r.p_value = 1.0;
        return r;
    }
    const double pool = (x1 + x2) / (n1 + n2);
    const boost::math::binomial_distribution<> d1(n1, pool), d2(n2, pool);
    std::vector<double> pmf2(b.total + 1);
    for (std::uint64_t k = 0; k <= b.total; ++k) pmf2[k] = boost::math::pdf(d2, static_cast<double>(k));
    const double threshold = std::abs(r.z) * (1.0 - 1e-9) - 1e-12;
    double p = 0.0;
    for (std::uint64_t i = 0; i <= a.total; ++i) {
        const double pi = boost::math::pdf(d1, static_cast<double>(i));
        for (std::uint64_t j = 0; j <= b.total; ++j) {
            if (std::abs(pooled_z(static_cast<double>(i), n1, static_cast<double>(j), n2)) >= threshold) {
                p += pi * pmf2[j];
            }
        }
    }
    r.p_value = std::min(1.0, p);
    r.method = "exact_unconditional";
    return r;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> out(m);
    double running = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double adj = std::min(1.0, static_cast<double>(m - k) * p_values[order[k]]);
        running = std::max(running, adj);
        out[order[k]] = running;
    }
    return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::invalid_argument, "spearman inputs differ in length");
    if (xs.size() < 3) throw Error(ErrorKind::invalid_argument, "spearman needs at least 3 pairs");
    for (double v : xs) {
        if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite spearman input");
    }
    for (double v : ys) {
        if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite spearman input");
    }
    if (is_constant(xs) || is_constant(ys)) throw Error(ErrorKind::undefined, "correlation undefined for a constant input");

    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    SpearmanResult r;
    r.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
    const std::size_t n = xs.size();
    if (n < 10) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<double> permuted(n);
        std::uint64_t hits = 0, total = 0;
        const double threshold = std::abs(r.rho) - 1e-12;
        do {
            for (std::size_t i = 0; i < n; ++i) permuted[i] = ry[perm[i]];
            if (std::abs(pearson(rx, permuted)) >= threshold) ++hits;
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        r.p_value = static_cast<double>(hits) / static_cast<double>(total);
        r.method = "exact_permutation";
    } else {
        const double df = static_cast<double>(n) - 2.0;
        const double denom = 1.0 - r.rho * r.rho;
        const double t = denom <= 0.0 ? std::numeric_limits<double>::infinity() : r.rho * std::sqrt(df / denom);
        r.p_value = student_t_two_sided_p(t, df);
        r.method = "t_approximation";
    }
    return r;
}

KappaResult kappa_from_table(std::uint64_t both, std::uint64_t only_a, std::uint64_t only_b, std::uint64_t neither) {
    const std::uint64_t n = both + only_a + only_b + neither;
    if (n == 0) throw Error(ErrorKind::empty_input, "kappa needs at least one paired verdict");
    const double nd = static_cast<double>(n);
    KappaResult k;
    k.n = n;
    k.agreement = static_cast<double>(both + neither) / nd;
    const double pa = static_cast<double>(both + only_a) / nd;
    const double pb = static_cast<double>(both + only_b) / nd;
    k.chance = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (k.chance < 1.0) k.kappa = (k.agreement - k.chance) / (1.0 - k.chance);
    return k;
}

KappaResult kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::invalid_argument, "kappa inputs differ in length");
    std::uint64_t t[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 1 || b[i] > 1) throw Error(ErrorKind::invalid_argument, "kappa inputs must be 0 or 1");
        ++t[a[i]][b[i]];
    }
    return kappa_from_table(t[1][1], t[1][0], t[0][1], t[0][0]);
}

PairedVerdicts pair_judges(const verdicts::VerdictStore& store, const std::string& judge_a,
                           const std::string& judge_b) {
    using Key = std::tuple<std::string, std::string, std::optional<std::int64_t>, std::optional<std::int64_t>>;
    std::map<Key, std::pair<int, int>> joined;
    for (const auto& r : store.records()) {
        const Key k{r.condition, r.prompt_id, r.train_seed, r.gen_seed};
        if (r.judge == judge_a) joined.try_emplace(k, -1, -1).first->second.first = r.unsafe;
        if (r.judge == judge_b) joined.try_emplace(k, -1, -1).first->second.second = r.unsafe;
    }
    PairedVerdicts out;
    for (const auto& [k, v] : joined) {
        if (v.first < 0 || v.second < 0) continue;
        out.a.push_back(static_cast<std::uint8_t>(v.first));
        out.b.push_back(static_cast<std::uint8_t>(v.second));
    }
    return out;
}

void validate_matrix(const SeedMatrix& m) {
    if (m.cells.empty()) throw Error(ErrorKind::empty_input, "seed matrix has no rows");
    const std::size_t c = m.cells.front().size();
    for (const auto& row : m.cells) {
        if (row.size() != c) throw Error(ErrorKind::invalid_argument, "seed matrix is not rectangular");
        for (double v : row) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "seed matrix cell is not finite");
        }
    }
    if (!m.row_labels.empty() && m.row_labels.size() != m.rows()) {
        throw Error(ErrorKind::invalid_argument, "row label count differs from row count");
    }
    if (!m.col_labels.empty() && m.col_labels.size() != c) {
        throw Error(ErrorKind::invalid_argument, "column label count differs from column count");
    }
}

SeedMatrix parse_seed_matrix(std::string_view text) {
    SeedMatrix m;
    double scale = 1.0;
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
                const std::string value = trim(std::string_view(body).substr(6));
                if (value == "percent") scale = 0.01;
                else if (value == "fraction") scale = 1.0;
                else throw Error(ErrorKind::parse, "unknown scale '" + value + "'", line_no);
            }
            continue;
        }
        auto fields = split(line);
        for (auto& f : fields) f = trim(f);
        if (!header) {
            if (fields.size() < 2 || fields[0] != "train_seed") {
                throw Error(ErrorKind::parse, "seed matrix header must start with train_seed", line_no);
            }
            m.col_labels.assign(fields.begin() + 1, fields.end());
            header = true;
            continue;
        }
        if (fields.size() != m.col_labels.size() + 1) {
            throw Error(ErrorKind::parse, "row has " + std::to_string(fields.size() - 1) + " cells, expected " +
                                              std::to_string(m.col_labels.size()), line_no);
        }
        m.row_labels.push_back(fields[0]);
        std::vector<double> row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            try {
                v = parse_double(fields[i], "cell") * scale;
            } catch (const Error& e) {
                throw Error(ErrorKind::parse, e.what(), line_no);
            }
            if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::parse, "rate cell outside [0, 1]", line_no);
            row.push_back(v);
        }
        m.cells.push_back(std::move(row));
    }
    if (!header) throw Error(ErrorKind::parse, "seed matrix has no header");
    validate_matrix(m);
    return m;
}

SeedMatrix read_seed_matrix(const std::string& path) {
    return parse_seed_matrix(read_file(path));
}

std::string format_seed_matrix(const SeedMatrix& m) {
    std::string out = "train_seed";
    for (std::size_t j = 0; j < m.cols(); ++j) out += "," + (j < m.col_labels.size() ? m.col_labels[j] : std::to_string(j));
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += i < m.row_labels.size() ? m.row_labels[i] : std::to_string(i);
        for (double v : m.cells[i]) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

SeedMatrix seed_matrix_from_table(const verdicts::StratifiedTable& table) {
    using verdicts::GroupKey;
    if (table.keys != std::vector<GroupKey>{GroupKey::train_seed, GroupKey::gen_seed}) {
        throw Error(ErrorKind::invalid_argument, "table must be grouped by (train_seed, gen_seed)");
    }
    std::set<verdicts::GroupValue> rows, cols;
    std::map<std::pair<verdicts::GroupValue, verdicts::GroupValue>, double> cell;
    for (const auto& r : table.rows) {
        if (std::holds_alternative<std::monostate>(r.group[0]) || std::holds_alternative<std::monostate>(r.group[1])) {
            throw Error(ErrorKind::missing_key, "records without seeds cannot form a seed matrix");
        }
        rows.insert(r.group[0]);
        cols.insert(r.group[1]);
        cell[{r.group[0], r.group[1]}] = static_cast<double>(r.unsafe) / static_cast<double>(r.total);
    }
    SeedMatrix m;
    for (const auto& c : cols) m.col_labels.push_back(verdicts::format_group_value(c));
    for (const auto& r : rows) {
        m.row_labels.push_back(verdicts::format_group_value(r));
        std::vector<double> values;
        for (const auto& c : cols) {
            const auto it = cell.find({r, c});
            if (it == cell.end()) {
                throw Error(ErrorKind::missing_key, "seed matrix cell (" + verdicts::format_group_value(r) + ", " +
                                                        verdicts::format_group_value(c) + ") has no records");
            }
            values.push_back(it->second);
        }
        m.cells.push_back(std::move(values));
    }
    return m;
}

std::string method_name(DecompositionMethod m) {
    return m == DecompositionMethod::sum_of_squares ? "sum_of_squares" : "marginal_variance";
}

DecompositionMethod parse_decomposition_method(std::string_view s) {
    if (s == "sum_of_squares") return DecompositionMethod::sum_of_squares;
    if (s == "marginal_variance") return DecompositionMethod::marginal_variance;
    throw Error(ErrorKind::invalid_argument, "unknown decomposition method '" + std::string(s) + "'");
}

VarianceDecomposition variance_decomposition(const SeedMatrix& m, double ci_level, DecompositionMethod method) {
    validate_matrix(m);
    check_level(ci_level);
    const std::size_t R = m.rows(), C = m.cols();
    if (R < 2 || C < 2) throw Error(ErrorKind::invalid_argument, "decomposition needs at least 2 rows and 2 columns");
    const double rd = static_cast<double>(R), cd = static_cast<double>(C), cells = rd * cd;

    std::vector<double> row_mean(R, 0.0), col_mean(C, 0.0);
    double gm = 0.0;
    double lo = m.cells[0][0], hi = lo;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const double v = m.cells[i][j];
            row_mean[i] += v / cd;
            col_mean[j] += v / rd;
            gm += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    gm /= cells;

    double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const double v = m.cells[i][j];
            ss_total += (v - gm) * (v - gm);
            const double e = v - row_mean[i] - col_mean[j] + gm;
            ss_res += e * e;
        }
    }
    for (double rm : row_mean) ss_rows += cd * (rm - gm) * (rm - gm);
    for (double cm : col_mean) ss_cols += rd * (cm - gm) * (cm - gm);

    VarianceDecomposition d;
    d.method = method;
    d.ci_level = ci_level;
    d.grand_mean = gm;
    d.total_std = std::sqrt(ss_total / (cells - 1.0));
    const double half = student_t_quantile(0.5 + ci_level / 2.0, cells - 1.0) * d.total_std / std::sqrt(cells);
    d.ci_low = gm - half;
    d.ci_high = gm + half;
    if (hi == lo) {
        d.degenerate = true;
        d.total_std = 0.0;
        d.ci_low = d.ci_high = gm;
        return d;
    }
    if (method == DecompositionMethod::sum_of_squares) {
        const double denom = ss_rows + ss_cols + ss_res;
        d.frac_rows = ss_rows / denom;
        d.frac_cols = ss_cols / denom;
        d.frac_residual = ss_res / denom;
    } else {
        const double var_cells = ss_total / (cells - 1.0);
        d.frac_rows = ss_rows / cd / (rd - 1.0) / var_cells;
        d.frac_cols = ss_cols / rd / (cd - 1.0) / var_cells;
        d.frac_residual = 1.0 - d.frac_rows - d.frac_cols;
    }
    return d;
}

CrossJudgeProfile cross_judge_profile(const verdicts::VerdictStore& store, const ProfileOptions& opts) {
    CrossJudgeProfile prof;
    prof.judges = store.judges();
    prof.conditions = store.conditions();
    if (prof.judges.size() < 2) throw Error(ErrorKind::invalid_argument, "cross-judge profile needs at least 2 judges");
    if (prof.conditions.size() < 2) {
        throw Error(ErrorKind::invalid_argument, "cross-judge profile needs at least 2 conditions");
    }

    std::map<std::pair<std::string, std::string>, std::pair<std::uint64_t, std::uint64_t>> counts;
    for (const auto& r : store.records()) {
        if (opts.stratum && r.stratum != *opts.stratum) continue;
        auto& c = counts[{r.judge, r.condition}];
        c.first += r.unsafe ? 1 : 0;
        c.second += 1;
    }
    std::vector<std::vector<double>> values;
    for (const auto& j : prof.judges) {
        std::vector<RateEstimate> row;
        std::vector<double> v;
        for (const auto& c : prof.conditions) {
            const auto it = counts.find({j, c});
            if (it == counts.end()) {
                throw Error(ErrorKind::missing_key, "judge '" + j + "' has no verdicts for condition '" + c + "'");
            }
            row.push_back(rate(it->second.first, it->second.second));
            v.push_back(row.back().rate);
        }
        prof.rates.push_back(std::move(row));
        values.push_back(std::move(v));
    }

    if (prof.conditions.size() >= 3) {
        for (std::size_t a = 0; a < prof.judges.size(); ++a) {
            for (std::size_t b = a + 1; b < prof.judges.size(); ++b) {
                JudgeConcordance jc{prof.judges[a], prof.judges[b], std::nullopt};
                if (!is_constant(values[a]) && !is_constant(values[b])) jc.rho = spearman(values[a], values[b]).rho;
                prof.concordance.push_back(std::move(jc));
            }
        }
    }

    prof.reference_judge = opts.reference_judge.value_or(prof.judges.front());
    const auto ref = std::find(prof.judges.begin(), prof.judges.end(), prof.reference_judge);
    if (ref == prof.judges.end()) {
        throw Error(ErrorKind::missing_key, "reference judge '" + prof.reference_judge + "' not in the store");
    }
    for (const auto& subset : opts.subsets) {
        std::vector<std::size_t> idx;
        for (const auto& name : subset) {
            const auto it = std::find(prof.conditions.begin(), prof.conditions.end(), name);
            if (it == prof.conditions.end()) throw Error(ErrorKind::missing_key, "unknown condition '" + name + "'");
            idx.push_back(static_cast<std::size_t>(it - prof.conditions.begin()));
        }
        SubsetOrdering so;
        so.subset = subset;
        for (std::size_t j = 0; j < prof.judges.size(); ++j) {
            auto order = idx;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return values[j][a] < values[j][b];
            });
            std::vector<std::string> names;
            for (auto i : order) names.push_back(prof.conditions[i]);
            so.ordering[prof.judges[j]] = std::move(names);
        }
        for (const auto& j : prof.judges) {
            if (so.ordering[j] != so.ordering[prof.reference_judge]) so.flagged.push_back(j);
        }
        prof.subsets.push_back(std::move(so));
    }
    return prof;
}

}  // namespace dosekit::stats
