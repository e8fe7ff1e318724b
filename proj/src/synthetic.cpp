#include "prism/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "prism/error.hpp"

namespace prism {

SyntheticData make_synthetic(const SyntheticSpec& spec)
{
    if (spec.weeks < 1 || spec.period < 2 || spec.n_terms < 1) {
        throw Error(ErrorCode::InvalidConfig, "synthetic spec needs weeks >= 1, period >= 2, terms >= 1");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    const std::size_t n = spec.weeks;
    const auto p = static_cast<std::size_t>(spec.n_terms);
    std::vector<double> y(n);
    std::vector<double> s(n);
    double a = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t % static_cast<std::size_t>(spec.period)) /
                             static_cast<double>(spec.period);
        s[t] = spec.seasonal_amplitude * (std::sin(phase) + 0.5 * std::cos(2.0 * phase));
        a = spec.ar_phi * a + spec.ar_sd * unit(rng);
        y[t] = spec.level + spec.slope * static_cast<double>(t) + s[t] + a + spec.noise_sd * unit(rng);
    }

    std::vector<double> loading(p);
    std::vector<double> offset(p);
    for (std::size_t i = 0; i < p; ++i) {
        loading[i] = 0.5 + static_cast<double>(i % 4) * 0.5;
        offset[i] = 10.0 * static_cast<double>(i + 1);
    }
    const double scale = spec.seasonal_amplitude > 0.0 ? spec.seasonal_amplitude : 1.0;
    std::vector<double> x(n * p);
    std::vector<std::string> terms;
    for (std::size_t i = 0; i < p; ++i) {
        terms.push_back("term" + std::to_string(i + 1));
    }
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < p; ++i) {
            x[t * p + i] = loading[i] * (y[t] - spec.level) / scale + offset[i] +
                           spec.term_noise_sd * unit(rng);
        }
    }
    return SyntheticData{WeeklySeries(spec.start, std::move(y)), WeeklySeries(spec.start, std::move(s)),
                         ExogenousPanel(spec.start, std::move(terms), std::move(x), "synthetic")};
}

} // namespace prism
