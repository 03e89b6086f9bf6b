// Regenerates data/example_incubations.csv:
//   make_example_data > data/example_incubations.csv

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "picurve/data_io.hpp"
#include "picurve/models.hpp"

namespace {

struct Recipe {
    const char* id;
    picurve::ModelId model;
    std::vector<double> params;
    bool respiration;
    std::size_t n;
    double max_irradiance;
};

// Irradiance is denser at low light: I_j = I_max (j / (n - 1))^1.5.
// Noise sd is 3% of the noiseless maximum rate; seed = 1000 + index.
const std::vector<Recipe> kRecipes = {
    {"PI000001", picurve::ModelId::lm, {0.045}, false, 8, 220.0},
    {"PI000002", picurve::ModelId::LS5, {8.0, 150.0}, false, 12, 1200.0},
    {"PI000003", picurve::ModelId::Ph10, {12.0, 120.0, 900.0}, false, 20, 2000.0},
    {"PI000004", picurve::ModelId::LS4, {6.0, 200.0, 0.4}, true, 60, 1500.0},
    {"PI000005", picurve::ModelId::Ph10, {5.0, 80.0, 500.0}, false, 8, 1200.0},
    {"PI000006", picurve::ModelId::LS2, {10.0, 250.0}, false, 12, 1500.0},
    {"PI000007", picurve::ModelId::lm, {0.03}, false, 20, 300.0},
    {"PI000008", picurve::ModelId::Ph03, {9.0, 100.0, 1200.0}, false, 60, 2500.0},
};

}  // namespace

int main() {
    std::printf("pi_information,I,P,true_model\n");
    for (std::size_t k = 0; k < kRecipes.size(); ++k) {
        const Recipe& r = kRecipes[k];
        std::vector<double> grid(r.n);
        for (std::size_t j = 0; j < r.n; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(r.n - 1);
            grid[j] = std::round(10.0 * r.max_irradiance * std::pow(u, 1.5)) / 10.0;
        }
        const picurve::ParameterVector truth(r.model, r.params, r.respiration);
        const auto clean = picurve::evaluate_grid(r.model, truth, grid);
        double top = 0.0;
        for (double p : clean) top = std::max(top, std::abs(p));
        const auto ds = picurve::make_synthetic(r.id, truth, grid, 0.03 * top, 1000 + k);
        const std::string model(picurve::to_string(r.model));
        for (std::size_t j = 0; j < r.n; ++j) {
            std::printf("%s,%.1f,%.4f,%s\n", r.id, ds.irradiance[j], ds.rate[j], model.c_str());
        }
    }
    return 0;
}
