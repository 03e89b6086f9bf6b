#include "picurve/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "picurve/error.hpp"
#include "picurve/models.hpp"

namespace picurve {

namespace {

constexpr std::string_view kExperimentColumn = "pi_information";
constexpr std::string_view kIrradianceColumn = "I";
constexpr std::string_view kRateColumn = "P";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

struct Record {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

// RFC 4180 records; quoted fields may contain commas, quotes ("") and newlines.
std::vector<Record> split_records(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    std::vector<Record> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') ++line;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            quoted = true;
            any = true;
            break;
        case ',':
            record.push_back(std::move(field));
            field.clear();
            any = true;
            break;
        case '\r':
            break;
        case '\n':
            if (any || !field.empty()) {
                record.push_back(std::move(field));
                records.push_back({record_line, std::move(record)});
            }
            record.clear();
            field.clear();
            any = false;
            record_line = line;
            break;
        default:
            field.push_back(c);
            any = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted field");
    if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back({record_line, std::move(record)});
    }
    return records;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.starts_with('+')) s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

std::string row_msg(std::string_view what, std::size_t row) {
    return std::string(what) + ", row " + std::to_string(row);
}

std::optional<double> finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return std::nullopt;
}

std::string opt_field(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

nlohmann::ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

// xoshiro256** seeded through splitmix64.
std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RawTable parse_csv(std::string_view text, std::string source) {
    const auto records = split_records(text);
    if (records.empty()) {
        throw DataError(source + ": missing header (expected columns pi_information, I, P)");
    }
    const auto& header = records.front().fields;
    std::optional<std::size_t> exp_col, i_col, p_col;
    std::vector<std::size_t> extra_cols;
    RawTable table;
    table.source = std::move(source);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto name = trim(header[c]);
        if (name == kExperimentColumn && !exp_col) {
            exp_col = c;
        } else if (name == kIrradianceColumn && !i_col) {
            i_col = c;
        } else if (name == kRateColumn && !p_col) {
            p_col = c;
        } else {
            extra_cols.push_back(c);
            table.extra_columns.emplace_back(name);
        }
    }
    std::vector<std::string> missing;
    if (!exp_col) missing.emplace_back(kExperimentColumn);
    if (!i_col) missing.emplace_back(kIrradianceColumn);
    if (!p_col) missing.emplace_back(kRateColumn);
    if (!missing.empty()) {
        std::string msg = table.source + ": missing required column";
        if (missing.size() > 1) msg += "s";
        for (std::size_t k = 0; k < missing.size(); ++k) msg += (k ? ", " : " ") + missing[k];
        throw DataError(msg);
    }

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r].fields;
        auto at = [&](std::size_t c) { return c < rec.size() ? std::string(trim(rec[c])) : std::string(); };
        RawRow row;
        row.row = records[r].line;
        row.experiment = at(*exp_col);
        row.irradiance = at(*i_col);
        row.rate = at(*p_col);
        for (std::size_t c : extra_cols) row.extra.push_back(at(c));
        table.rows.push_back(std::move(row));
    }
    return table;
}

RawTable parse_csv(std::istream& in, std::string source) {
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError(source + ": read error");
    return parse_csv(std::string_view(buf.str()), std::move(source));
}

RawTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_csv(in, path.string());
}

FormatReport format_check(const RawTable& raw) {
    FormatReport report;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const RawRow*>> groups;
    for (const auto& row : raw.rows) {
        if (row.experiment.empty()) {
            report.violations.push_back({row.row, "", row_msg("missing pi_information", row.row)});
            continue;
        }
        auto [it, inserted] = groups.try_emplace(row.experiment);
        if (inserted) order.push_back(row.experiment);
        it->second.push_back(&row);
    }

    for (const auto& id : order) {
        const auto& rows = groups[id];
        Dataset ds;
        ds.id = id;
        bool bad_rows = false;
        for (const RawRow* row : rows) {
            const auto i = parse_number(row->irradiance);
            const auto p = parse_number(row->rate);
            auto flag = [&](std::string msg) {
                report.violations.push_back({row->row, id, std::move(msg)});
                bad_rows = true;
            };
            if (row->irradiance.empty()) {
                flag(row_msg("missing irradiance", row->row));
            } else if (!i) {
                flag(row_msg("non-numeric irradiance '" + row->irradiance + "'", row->row));
            } else if (!std::isfinite(*i)) {
                flag(row_msg("non-finite irradiance", row->row));
            } else if (*i < 0.0) {
                flag(row_msg("negative irradiance", row->row));
            }
            if (row->rate.empty()) {
                flag(row_msg("missing rate", row->row));
            } else if (!p) {
                flag(row_msg("non-numeric rate '" + row->rate + "'", row->row));
            } else if (!std::isfinite(*p)) {
                flag(row_msg("non-finite rate", row->row));
            }
            ds.irradiance.push_back(i.value_or(0.0));
            ds.rate.push_back(p.value_or(0.0));
        }
        for (std::size_t c = 0; c < raw.extra_columns.size(); ++c) {
            const std::string& value = rows.front()->extra[c];
            if (!value.empty()) ds.metadata[raw.extra_columns[c]] = value;
        }
        if (bad_rows) continue;
        const auto problems = dataset_violations(ds);
        for (const auto& msg : problems) report.violations.push_back({0, id, msg});
        if (problems.empty()) report.datasets.push_back(std::move(ds));
    }
    return report;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

RawTable to_raw_table(std::span<const Dataset> datasets) {
    RawTable table;
    for (const auto& ds : datasets) {
        for (const auto& [key, value] : ds.metadata) {
            if (std::find(table.extra_columns.begin(), table.extra_columns.end(), key) ==
                table.extra_columns.end()) {
                table.extra_columns.push_back(key);
            }
        }
    }
    std::size_t r = 1;
    for (const auto& ds : datasets) {
        for (std::size_t j = 0; j < ds.size(); ++j) {
            RawRow row;
            row.row = ++r;
            row.experiment = ds.id;
            row.irradiance = format_number(ds.irradiance[j]);
            row.rate = format_number(ds.rate[j]);
            for (const auto& col : table.extra_columns) {
                const auto it = ds.metadata.find(col);
                row.extra.push_back(it == ds.metadata.end() ? std::string() : it->second);
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string write_csv(std::span<const Dataset> datasets) {
    const RawTable table = to_raw_table(datasets);
    std::string out = "pi_information,I,P";
    for (const auto& col : table.extra_columns) out += "," + csv_escape(col);
    out += "\n";
    for (const auto& row : table.rows) {
        out += csv_escape(row.experiment) + "," + row.irradiance + "," + row.rate;
        for (const auto& v : row.extra) out += "," + csv_escape(v);
        out += "\n";
    }
    return out;
}

std::vector<double> high_res_grid(const Dataset& data, std::size_t m) {
    if (m < 2) throw InvalidParameters("high_res_grid needs m >= 2");
    if (data.size() == 0) throw DataError("high_res_grid needs a non-empty dataset");
    const double top = data.max_irradiance();
    std::vector<double> grid(m);
    for (std::size_t j = 0; j < m; ++j) {
        grid[j] = top * static_cast<double>(j) / static_cast<double>(m - 1);
    }
    grid.back() = top;
    return grid;
}

std::vector<TidyRow> tidy(std::span<const FitResult> fits,
                          std::span<const std::optional<IntervalSet>> intervals,
                          std::span<const std::optional<CriteriaSet>> criteria) {
    if (intervals.size() != fits.size() || criteria.size() != fits.size()) {
        throw InvalidParameters("tidy: intervals and criteria must run parallel to fits");
    }
    std::vector<std::size_t> order(fits.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(fits[a].dataset_id, fits[a].model) < std::tie(fits[b].dataset_id, fits[b].model);
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& a = fits[order[i - 1]];
        const auto& b = fits[order[i]];
        if (a.dataset_id == b.dataset_id && a.model == b.model) {
            throw InvalidParameters("tidy: duplicate fit for " + a.dataset_id + "/" +
                                    std::string(to_string(a.model)));
        }
    }

    std::vector<TidyRow> rows;
    for (std::size_t idx : order) {
        const FitResult& fit = fits[idx];
        const auto& ci = intervals[idx];
        const auto& ic = criteria[idx];
        auto base = [&](std::string quantity) {
            TidyRow row;
            row.dataset_id = fit.dataset_id;
            row.model = fit.model;
            row.quantity = std::move(quantity);
            return row;
        };

        std::vector<Param> names;
        if (fit.ok()) {
            names = fit.params.names();
        } else {
            const auto& spec = model_spec(fit.model);
            names.assign(spec.parameters.begin(), spec.parameters.end());
        }
        for (std::size_t p = 0; p < names.size(); ++p) {
            TidyRow row = base(std::string(to_string(names[p])));
            if (!fit.ok()) {
                row.reason = "not-converged";
            } else {
                row.estimate = finite_or_null(fit.params.get(names[p]));
                if (ci && p < ci->parameters.size() && ci->parameters[p].param == names[p]) {
                    const auto& pi = ci->parameters[p];
                    row.std_error = finite_or_null(pi.std_error);
                    row.ci_lower = finite_or_null(pi.lower);
                    row.ci_upper = finite_or_null(pi.upper);
                    if (!row.std_error || !row.ci_lower || !row.ci_upper) row.reason = "non-finite";
                } else {
                    row.reason = "no-covariance";
                }
                if (!row.estimate) row.reason = "non-finite";
            }
            rows.push_back(std::move(row));
        }

        for (std::string_view stat : kTidyStatistics) {
            TidyRow row = base(std::string(stat));
            if (stat == "converged") {
                row.estimate = (fit.ok() && fit.converged) ? 1.0 : 0.0;
                rows.push_back(std::move(row));
                continue;
            }
            if (!fit.ok()) {
                row.reason = "not-converged";
                rows.push_back(std::move(row));
                continue;
            }
            double v = 0.0;
            std::string why = "non-finite";
            if (stat == "sse") {
                v = fit.sse;
            } else if (stat == "r2") {
                v = fit.r2;
                why = "constant-response";
            } else if (stat == "adj_r2") {
                v = fit.adj_r2;
                why = "undefined";
            } else if (!ic) {
                v = std::nan("");
                why = "no-criteria";
            } else if (stat == "aic") {
                v = ic->aic;
            } else if (stat == "aicc") {
                v = ic->aicc;
                if (ic->aicc_undefined) why = "aicc-undefined";
            } else {
                v = ic->bic;
            }
            row.estimate = finite_or_null(v);
            if (!row.estimate) row.reason = why;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string tidy_csv(std::span<const TidyRow> rows) {
    std::string out = "dataset_id,model,quantity,estimate,std_error,ci_lower,ci_upper,reason\n";
    for (const auto& r : rows) {
        out += csv_escape(r.dataset_id) + "," + std::string(to_string(r.model)) + "," + r.quantity + "," +
               opt_field(r.estimate) + "," + opt_field(r.std_error) + "," + opt_field(r.ci_lower) + "," +
               opt_field(r.ci_upper) + "," + r.reason + "\n";
    }
    return out;
}

FitReport analyze_fit(FitResult fit, const Dataset& data, double level) {
    FitReport report;
    report.fit = std::move(fit);
    if (!report.fit.ok()) return report;
    report.criteria = information_criteria(report.fit);
    try {
        report.covariance = covariance(info_matrix(report.fit, data));
        report.intervals = conf_intervals(report.fit, *report.covariance, level);
    } catch (const Error& e) {
        report.covariance.reset();
        report.intervals.reset();
        report.diagnostics_error = e.what();
    }
    return report;
}

std::string results_json(std::span<const FitReport> reports) {
    using json = nlohmann::ordered_json;
    json doc;
    doc["schema"] = kResultsSchema;
    doc["schema_version"] = kResultsSchemaVersion;
    json fits = json::array();
    for (const auto& r : reports) {
        const FitResult& f = r.fit;
        json j;
        j["dataset_id"] = f.dataset_id;
        j["model"] = to_string(f.model);
        j["model_class"] = to_string(model_spec(f.model).model_class);
        j["criterion"] = to_string(f.criterion);
        if (!f.ok()) {
            j["status"] = "failed";
            j["failure"] = *f.failure;
            fits.push_back(std::move(j));
            continue;
        }
        j["status"] = f.converged ? "converged" : "not-converged";
        j["n"] = f.n;
        j["n_free"] = f.n_free;
        j["iterations"] = f.iterations;
        j["objective_value"] = number_or_null(f.objective_value);
        j["sse"] = number_or_null(f.sse);
        j["sigma2_hat"] = number_or_null(f.sigma2_hat);
        j["sigma2_floored"] = f.sigma2_floored;
        j["r2"] = number_or_null(f.r2);
        j["adj_r2"] = number_or_null(f.adj_r2);

        json params = json::array();
        const auto names = f.params.names();
        for (std::size_t p = 0; p < names.size(); ++p) {
            json e;
            e["name"] = to_string(names[p]);
            e["estimate"] = number_or_null(f.params.get(names[p]));
            if (r.intervals && p < r.intervals->parameters.size()) {
                const auto& pi = r.intervals->parameters[p];
                e["std_error"] = number_or_null(pi.std_error);
                e["ci_lower"] = number_or_null(pi.lower);
                e["ci_upper"] = number_or_null(pi.upper);
            } else {
                e["std_error"] = nullptr;
                e["ci_lower"] = nullptr;
                e["ci_upper"] = nullptr;
            }
            params.push_back(std::move(e));
        }
        j["parameters"] = std::move(params);
        j["ci_level"] = r.intervals ? json(r.intervals->level) : json(nullptr);

        if (r.criteria) {
            j["criteria"] = {{"aic", number_or_null(r.criteria->aic)},
                             {"aicc", number_or_null(r.criteria->aicc)},
                             {"bic", number_or_null(r.criteria->bic)},
                             {"k", r.criteria->k_ic}};
        } else {
            j["criteria"] = nullptr;
        }
        if (r.covariance) {
            j["covariance"] = {{"condition_number", number_or_null(r.covariance->condition_number)},
                               {"pseudo_inverted", r.covariance->pseudo_inverted}};
        } else {
            j["covariance"] = nullptr;
        }
        if (!r.diagnostics_error.empty()) j["diagnostics_error"] = r.diagnostics_error;

        if (f.derived) {
            j["derived"] = {{"P_max", number_or_null(f.derived->p_max)},
                            {"I_beta", number_or_null(f.derived->i_beta)},
                            {"alpha", number_or_null(f.derived->alpha)},
                            {"I_opt", number_or_null(f.derived->i_opt)}};
        } else {
            j["derived"] = nullptr;
            if (!f.derived_error.empty()) j["derived_error"] = f.derived_error;
        }
        fits.push_back(std::move(j));
    }
    doc["fits"] = std::move(fits);
    return doc.dump(2) + "\n";
}

NormalStream::NormalStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
}

double NormalStream::uniform() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return static_cast<double>(result >> 11) * 0x1.0p-53;
}

double NormalStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Dataset make_synthetic(std::string id, const ParameterVector& truth,
                       std::span<const double> irradiance, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidParameters("sigma must be finite and >= 0");
    Dataset ds;
    ds.id = std::move(id);
    ds.irradiance.assign(irradiance.begin(), irradiance.end());
    ds.rate = evaluate_grid(truth.model(), truth, irradiance);
    NormalStream noise(seed);
    for (double& p : ds.rate) p += sigma * noise.next();
    return ds;
}

std::vector<Dataset> example_data() {
    FormatReport report = format_check(parse_csv(example_data_csv(), "example_incubations.csv"));
    if (!report.ok()) throw Error("bundled example data failed validation: " + report.violations.front().message);
    return std::move(report.datasets);
}

}  // namespace picurve
