#include "picurve/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "picurve/classifier.hpp"
#include "picurve/data_io.hpp"
#include "picurve/error.hpp"
#include "picurve/fit.hpp"
#include "picurve/inference.hpp"
#include "picurve/models.hpp"
#include "picurve/plot.hpp"

#ifndef PICURVE_VERSION
#define PICURVE_VERSION "0.0.0"
#endif

namespace picurve {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string input;
    std::string model = "auto";
    std::string criterion = "mse";
    bool respiration = false;
    double level = 0.95;
    std::uint64_t seed = FitOptions{}.seed;
    std::string out_dir = ".";
    bool summary = false;
    std::size_t grid_points = 200;
    bool ci = false;
    int threads = 0;
    bool quiet = false;
};

// Thrown for a non-converged fit after outputs are written.
struct ConvergenceExit {};

std::string file_safe(std::string_view id) {
    std::string s;
    for (char c : id) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '-' || c == '_';
        s.push_back(ok ? c : '_');
    }
    return s;
}

std::vector<Dataset> read_input(const Options& o, std::ostream& err) {
    const FormatReport report = format_check(load_csv(o.input));
    if (!report.ok()) {
        for (const auto& v : report.violations) {
            err << o.input << ": ";
            if (!v.experiment.empty()) err << v.experiment << ": ";
            err << v.message << "\n";
        }
        throw DataError(std::to_string(report.violations.size()) + " validation problem(s) in " + o.input);
    }
    if (report.datasets.empty()) throw DataError(o.input + " holds no observations");
    return report.datasets;
}

FitOptions fit_options(const Options& o) {
    FitOptions f;
    f.criterion = parse_criterion(o.criterion);
    f.respiration = o.respiration;
    f.seed = o.seed;
    f.threads = o.threads;
    return f;
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidParameters("--level must lie in (0, 1)");
}

// `auto` picks LS5 or Ph10 from the classifier's label.
ModelId choose_model(const Options& o, const Dataset& data, const FitOptions& f) {
    if (o.model != "auto") return parse_model_id(o.model);
    const ClassLabel label = classify(data, f);
    return label.label == ModelClass::photoinhibited ? ModelId::Ph10 : ModelId::LS5;
}

void emit(const Options& o, const std::string& name, std::string_view contents) {
    fs::create_directories(o.out_dir);
    write_file_atomic(fs::path(o.out_dir) / name, contents);
}

std::vector<std::optional<IntervalSet>> intervals_of(const std::vector<FitReport>& reports) {
    std::vector<std::optional<IntervalSet>> out;
    for (const auto& r : reports) out.push_back(r.intervals);
    return out;
}

std::vector<std::optional<CriteriaSet>> criteria_of(const std::vector<FitReport>& reports) {
    std::vector<std::optional<CriteriaSet>> out;
    for (const auto& r : reports) out.push_back(r.criteria);
    return out;
}

std::string tidy_of(const std::vector<FitReport>& reports) {
    std::vector<FitResult> fits;
    for (const auto& r : reports) fits.push_back(r.fit);
    return tidy_csv(tidy(fits, intervals_of(reports), criteria_of(reports)));
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
    check_level(o.level);
    const auto datasets = read_input(o, err);
    const FitOptions f = fit_options(o);
    std::vector<FitReport> reports;
    bool all_converged = true;
    for (const auto& d : datasets) {
        const ModelId id = choose_model(o, d, f);
        reports.push_back(analyze_fit(fit_model(d, id, f), d, o.level));
        const auto& fit = reports.back().fit;
        all_converged = all_converged && fit.converged;
        if (fit.ok() && std::isnan(fit.r2)) err << "warning: " << d.id << ": constant response, R² undefined\n";
        if (!reports.back().diagnostics_error.empty()) {
            err << "warning: " << d.id << " " << to_string(id) << ": " << reports.back().diagnostics_error << "\n";
        }
        if (!o.quiet) {
            out << d.id << "  " << to_string(id) << "  " << (fit.converged ? "converged" : "NOT converged")
                << "  R2 = " << round_half_even(fit.r2, 3) << "\n";
        }
    }
    emit(o, "fit_tidy.csv", tidy_of(reports));
    emit(o, "fit_results.json", results_json(reports));
    if (!all_converged) throw ConvergenceExit{};
    return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
    check_level(o.level);
    const auto datasets = read_input(o, err);
    const FitOptions f = fit_options(o);
    std::vector<FitReport> reports;
    PlotSpec spec;
    spec.kind = PlotKind::panel_grid;
    spec.width = 1200;
    spec.height = 1200;
    for (const auto& d : datasets) {
        const auto fits = fit_all(d, f);
        for (const auto& fit : fits) reports.push_back(analyze_fit(fit, d, o.level));
        spec.title = d.id;
        emit(o, "compare_" + file_safe(d.id) + ".svg", render_panel_grid(d, fits, spec));
        if (!o.quiet) {
            out << d.id << "  best " << to_string(fits.front().model) << "  R2 = "
                << round_half_even(fits.front().r2, 3) << "\n";
        }
    }
    emit(o, "compare_tidy.csv", tidy_of(reports));
    emit(o, "compare_results.json", results_json(reports));
    return kExitOk;
}

std::string aicc_field(const ClassLabel& label, ModelId id) {
    for (const auto& e : label.evidence) {
        if (e.model == id && !e.failure) return format_number(e.aicc);
    }
    return "";
}

int cmd_classify(const Options& o, std::ostream& out, std::ostream& err) {
    const auto datasets = read_input(o, err);
    FitOptions f = fit_options(o);
    const BatchClassification batch = classify_batch(datasets, f);

    std::string csv = "dataset_id,label,chosen_model,aicc_lm,aicc_LS5,aicc_Ph10,I_beta,guard,error\n";
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        csv += csv_escape(datasets[i].id) + ",";
        if (const auto& l = batch.labels[i]) {
            std::string i_beta;
            for (const auto& e : l->evidence) {
                if (e.model == ModelId::Ph10 && e.i_beta) i_beta = format_number(*e.i_beta);
            }
            csv += std::string(to_string(l->label)) + "," + std::string(to_string(l->chosen_model)) + "," +
                   aicc_field(*l, ModelId::lm) + "," + aicc_field(*l, ModelId::LS5) + "," +
                   aicc_field(*l, ModelId::Ph10) + "," + i_beta + "," +
                   (l->guards_applied.empty() ? "" : "I_beta-out-of-range") + ",\n";
            if (!o.quiet) out << datasets[i].id << "  " << to_string(l->label) << "\n";
        } else {
            csv += ",,,,,,," + csv_escape(batch.errors[i]) + "\n";
            if (!o.quiet) out << datasets[i].id << "  failed: " << batch.errors[i] << "\n";
        }
    }
    emit(o, "classify_labels.csv", csv);

    if (batch.summary.total == 0) throw ConvergenceError("no dataset could be classified");
    if (o.summary) {
        const auto labels = frequency_labels(batch.summary);
        constexpr ModelClass kOrder[] = {ModelClass::light_limited, ModelClass::light_saturated,
                                         ModelClass::photoinhibited};
        for (std::size_t c = 0; c < 3; ++c) {
            out << to_string(kOrder[c]) << ": " << batch.summary.counts[c] << " (" << labels[c] << ")\n";
        }
        if (batch.summary.failures) out << "failed: " << batch.summary.failures << "\n";
        PlotSpec spec;
        spec.kind = PlotKind::class_frequency;
        emit(o, "class_frequency.svg", render_class_frequency(batch.summary, spec));
    }
    return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
    check_level(o.level);
    if (o.grid_points < 2) throw InvalidParameters("--grid-points must be at least 2");
    const auto datasets = read_input(o, err);
    const FitOptions f = fit_options(o);
    std::string csv = o.ci ? "dataset_id,model,I,P,lower,upper\n" : "dataset_id,model,I,P\n";
    bool all_converged = true;
    for (const auto& d : datasets) {
        const ModelId id = choose_model(o, d, f);
        const FitReport report = analyze_fit(fit_model(d, id, f), d, o.level);
        all_converged = all_converged && report.fit.converged;
        const auto grid = high_res_grid(d, o.grid_points);
        std::optional<PredictionBand> band;
        if (o.ci) {
            if (!report.covariance) {
                throw InferenceError(d.id + ": no covariance for the band (" + report.diagnostics_error + ")");
            }
            band = prediction_band(report.fit, *report.covariance, grid, o.level, o.threads);
        }
        const auto values = evaluate_grid(id, report.fit.params, grid);
        const std::string prefix = csv_escape(d.id) + "," + std::string(to_string(id)) + ",";
        for (std::size_t j = 0; j < grid.size(); ++j) {
            csv += prefix + format_number(grid[j]) + "," + format_number(values[j]);
            if (band) csv += "," + format_number(band->lower[j]) + "," + format_number(band->upper[j]);
            csv += "\n";
        }
        if (!o.quiet) out << d.id << "  " << to_string(id) << "  " << grid.size() << " points\n";
    }
    emit(o, "predict.csv", csv);
    if (!all_converged) throw ConvergenceExit{};
    return kExitOk;
}

int cmd_plot(const Options& o, std::ostream& out, std::ostream& err) {
    check_level(o.level);
    const auto datasets = read_input(o, err);
    const FitOptions f = fit_options(o);
    bool all_converged = true;
    PlotSpec spec;
    spec.show_ci = o.ci;
    for (const auto& d : datasets) {
        const ModelId id = choose_model(o, d, f);
        const FitReport report = analyze_fit(fit_model(d, id, f), d, o.level);
        all_converged = all_converged && report.fit.converged;
        std::optional<PredictionBand> band;
        if (o.ci) {
            if (!report.covariance) {
                throw InferenceError(d.id + ": no covariance for the band (" + report.diagnostics_error + ")");
            }
            band = prediction_band(report.fit, *report.covariance, high_res_grid(d, 200), o.level, o.threads);
        }
        const std::string name = "plot_" + file_safe(d.id) + "_" + std::string(to_string(id)) + ".svg";
        emit(o, name, render_single(d, report.fit, band, spec));
        if (!o.quiet) out << name << "\n";
    }
    if (!all_converged) throw ConvergenceExit{};
    return kExitOk;
}

std::optional<int> env_threads() {
    const char* raw = std::getenv(std::string(kThreadsEnv).c_str());
    if (!raw || !*raw) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v < 0 || v > 4096) {
        throw InvalidParameters(std::string(kThreadsEnv) + " must be a non-negative integer");
    }
    return static_cast<int>(v);
}

}  // namespace

std::string_view version() {
    return PICURVE_VERSION;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp.string());
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot move " + tmp.string() + " to " + path.string());
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Fit, compare, classify and plot photosynthesis-irradiance curves", "picurve"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(version()));
    auto* threads_opt = app.add_option("--threads", o.threads, "Worker threads for batch work (0 = all cores)")
                            ->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", o.quiet, "Suppress progress output");

    auto input = [&](CLI::App* sub) {
        sub->add_option("input", o.input, "CSV with columns pi_information, I, P")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out_dir, "Output directory");
    };
    auto model_opts = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--model", o.model, "Model id, or auto");
        if (required) opt->required();
        sub->add_option("--criterion", o.criterion, "mse or mle")->check(CLI::IsMember({"mse", "mle"}));
        sub->add_flag("--respiration", o.respiration, "Estimate a respiration offset R");
        sub->add_option("--level", o.level, "Confidence level");
        sub->add_option("--seed", o.seed, "Seed for the jittered restarts");
    };

    auto* fit = app.add_subcommand("fit", "Fit one model per experiment");
    input(fit);
    model_opts(fit, true);
    auto* compare = app.add_subcommand("compare", "Fit all 24 models per experiment");
    input(compare);
    compare->add_option("--criterion", o.criterion, "mse or mle")->check(CLI::IsMember({"mse", "mle"}));
    compare->add_flag("--respiration", o.respiration, "Estimate a respiration offset R");
    compare->add_option("--level", o.level, "Confidence level");
    compare->add_option("--seed", o.seed, "Seed for the jittered restarts");
    auto* cls = app.add_subcommand("classify", "Label experiments as light-limited, light-saturated or photoinhibited");
    input(cls);
    cls->add_flag("--summary", o.summary, "Print class frequencies and write class_frequency.svg");
    auto* predict = app.add_subcommand("predict", "High-resolution predictions");
    input(predict);
    model_opts(predict, true);
    predict->add_option("--grid-points", o.grid_points, "Grid size");
    predict->add_flag("--ci", o.ci, "Add confidence band columns");
    auto* plot = app.add_subcommand("plot", "Single-fit SVG per experiment");
    input(plot);
    model_opts(plot, true);
    plot->add_flag("--ci", o.ci, "Draw dashed confidence band");

    try {
        app.parse(argc, argv);
        if (threads_opt->count() == 0) {
            if (auto t = env_threads()) o.threads = *t;
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const InvalidParameters& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (*fit) return cmd_fit(o, out, err);
        if (*compare) return cmd_compare(o, out, err);
        if (*cls) return cmd_classify(o, out, err);
        if (*predict) return cmd_predict(o, out, err);
        return cmd_plot(o, out, err);
    } catch (const ConvergenceExit&) {
        err << "error: at least one fit did not converge\n";
        return kExitConvergence;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const InferenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const UnderdeterminedError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InvalidParameters& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace picurve
