#pragma once

#include <vector>

namespace rscox::scenarios {

/// Estimated pore pressure (bara) near Slochteren on January 1st, 1995-2021.
inline const std::vector<double>& slochterenPressure()
{
    static const std::vector<double> series{
        179.81, 177.39, 174.86, 172.20, 169.42, 166.50, 163.48,  // 1995-2001
        160.32, 157.05, 153.65, 150.13, 146.49, 142.72, 138.82,  // 2002-2008
        134.81, 130.68, 126.43, 122.04, 117.53, 112.91, 108.16,  // 2009-2015
        103.28, 98.29,  93.17,  87.94,  82.56,  77.08,           // 2016-2021
    };
    return series;
}

/// Standard deviation of the Slochteren pressure estimates, in bara.
inline constexpr double slochterenSigma = 7.17;

/// Increasing mean m(t_k) = 6 - 1/(0.5k + 1), k = 0..nSteps.
inline std::vector<double> risingMean(int nSteps)
{
    std::vector<double> m;
    for (int k = 0; k <= nSteps; ++k) m.push_back(6.0 - 1.0 / (0.5 * k + 1.0));
    return m;
}

/// Decreasing mean m(t_k) = 5 + 10/(2k + 1), k = 0..nSteps.
inline std::vector<double> fallingMean(int nSteps)
{
    std::vector<double> m;
    for (int k = 0; k <= nSteps; ++k) m.push_back(5.0 + 10.0 / (2.0 * k + 1.0));
    return m;
}

/// Setup shared by the moment-approximation figures.
struct MomentFigure {
    std::vector<double> mean;
    double alpha = 0.01;
    double step = 0.1;
    double gamma0 = 0.2;
    double sigma2 = 2.0;
};

inline MomentFigure figureOne() { return {risingMean(50)}; }
inline MomentFigure figureTwo() { return {fallingMean(50)}; }

}  // namespace rscox::scenarios
