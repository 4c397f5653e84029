#include "proxtrend/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "proxtrend/rng.hpp"

namespace proxtrend {

Vector TrendData::grid_vector() const {
    return Eigen::Map<const Vector>(grid.data(), static_cast<Eigen::Index>(grid.size()));
}

double TrendData::var_y() const {
    if (m < 2) return 0.0;
    const Vector w = weights_real();
    const double mean = w.dot(ybar) / static_cast<double>(m);
    double between = 0.0;
    for (int i = 0; i < n(); ++i) between += w[i] * (ybar[i] - mean) * (ybar[i] - mean);
    return (sse + between) / static_cast<double>(m - 1);
}

TrendData aggregate(const std::vector<std::pair<double, double>>& points) {
    if (points.empty()) throw EmptyData("aggregate: no observations");
    for (const auto& [x, y] : points) {
        if (!std::isfinite(x)) throw InvalidGrid("aggregate: non-finite grid location");
        (void)y;
    }
    std::vector<std::pair<double, double>> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    TrendData out;
    out.m = static_cast<long>(sorted.size());
    std::vector<double> ybar;
    std::vector<int> w;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) {
            sum += sorted[j].second;
            ++j;
        }
        const int count = static_cast<int>(j - i);
        const double mean = sum / count;
        double ss = 0.0;
        for (std::size_t t = i; t < j; ++t) ss += (sorted[t].second - mean) * (sorted[t].second - mean);
        out.grid.push_back(sorted[i].first);
        ybar.push_back(mean);
        w.push_back(count);
        out.sse += ss;
        i = j;
    }
    out.ybar = Eigen::Map<const Vector>(ybar.data(), static_cast<Eigen::Index>(ybar.size()));
    out.weights = Eigen::Map<const Eigen::VectorXi>(w.data(), static_cast<Eigen::Index>(w.size()));
    out.raw = std::move(sorted);
    return out;
}

std::vector<std::pair<double, double>> flatten(const TrendData& data) {
    if (data.raw) return *data.raw;
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(data.m));
    for (int i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.weights[i]; ++j) out.emplace_back(data.grid[i], data.ybar[i]);
    }
    return out;
}

ThinningResult thin(const TrendData& data, int n_bins) {
    if (n_bins < 2) throw InvalidConfig("thin: need at least 2 bins");
    ThinningResult out;
    const int n = data.n();
    const double xmin = data.grid.front();
    const double xmax = data.grid.back();
    out.interval_width = (xmax - xmin) / n_bins;
    if (n_bins >= n || out.interval_width <= 0.0) {
        out.data = data;
        out.mapping.resize(n);
        for (int i = 0; i < n; ++i) out.mapping[i] = i;
        return out;
    }

    std::vector<int> bin_of(n);
    for (int i = 0; i < n; ++i) {
        int b = static_cast<int>((data.grid[i] - xmin) / out.interval_width);
        bin_of[i] = std::min(b, n_bins - 1);
    }

    out.mapping.resize(n);
    std::vector<double> merged_x, merged_ybar;
    std::vector<int> merged_w;
    double sse = data.sse;
    int i = 0;
    while (i < n) {
        int j = i;
        double wx = 0.0, wy = 0.0;
        long wsum = 0;
        while (j < n && bin_of[j] == bin_of[i]) {
            wx += data.weights[j] * data.grid[j];
            wy += data.weights[j] * data.ybar[j];
            wsum += data.weights[j];
            ++j;
        }
        const double xbar = wx / wsum;
        const double yb = wy / wsum;
        for (int t = i; t < j; ++t) {
            out.mapping[t] = static_cast<int>(merged_x.size());
            sse += data.weights[t] * (data.ybar[t] - yb) * (data.ybar[t] - yb);
        }
        merged_x.push_back(xbar);
        merged_ybar.push_back(yb);
        merged_w.push_back(static_cast<int>(wsum));
        i = j;
    }

    out.data.grid = merged_x;
    out.data.ybar = Eigen::Map<const Vector>(merged_ybar.data(), static_cast<Eigen::Index>(merged_ybar.size()));
    out.data.weights = Eigen::Map<const Eigen::VectorXi>(merged_w.data(), static_cast<Eigen::Index>(merged_w.size()));
    out.data.sse = sse;
    out.data.m = data.m;
    if (data.raw) {
        std::vector<std::pair<double, double>> shifted;
        shifted.reserve(data.raw->size());
        // raw is sorted by x, so locate each point's original index by scan
        std::size_t loc = 0;
        for (const auto& [x, y] : *data.raw) {
            while (loc + 1 < data.grid.size() && data.grid[loc] < x) ++loc;
            shifted.emplace_back(merged_x[static_cast<std::size_t>(out.mapping[loc])], y);
        }
        out.data.raw = std::move(shifted);
    }
    return out;
}

TrendKind trend_from_name(const std::string& name) {
    if (name == "piecewise_linear") return TrendKind::piecewise_linear;
    if (name == "smooth_trend") return TrendKind::smooth_trend;
    if (name == "sinusoid") return TrendKind::sinusoid;
    if (name == "piecewise_quad_cubic") return TrendKind::piecewise_quad_cubic;
    if (name == "inc_sinusoid") return TrendKind::inc_sinusoid;
    if (name == "convex_linear") return TrendKind::convex_linear;
    if (name == "truncated_cubic") return TrendKind::truncated_cubic;
    if (name == "logarithm") return TrendKind::logarithm;
    throw UnknownTrend("unknown trend: " + name);
}

std::string trend_name(TrendKind kind) {
    switch (kind) {
        case TrendKind::piecewise_linear: return "piecewise_linear";
        case TrendKind::smooth_trend: return "smooth_trend";
        case TrendKind::sinusoid: return "sinusoid";
        case TrendKind::piecewise_quad_cubic: return "piecewise_quad_cubic";
        case TrendKind::inc_sinusoid: return "inc_sinusoid";
        case TrendKind::convex_linear: return "convex_linear";
        case TrendKind::truncated_cubic: return "truncated_cubic";
        case TrendKind::logarithm: return "logarithm";
    }
    throw UnknownTrend("unknown trend kind");
}

bool is_shape_trend(TrendKind kind) {
    switch (kind) {
        case TrendKind::inc_sinusoid:
        case TrendKind::convex_linear:
        case TrendKind::truncated_cubic:
        case TrendKind::logarithm:
            return true;
        default:
            return false;
    }
}

Vector piecewise_linear_trend(const Vector& grid, const std::vector<std::pair<double, double>>& knots) {
    if (knots.size() < 2) throw InvalidConfig("piecewise_linear_trend: need at least 2 knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first)) {
            throw InvalidConfig("piecewise_linear_trend: knot x-values must increase");
        }
    }
    Vector out(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        std::size_t seg = 0;
        while (seg + 2 < knots.size() && x > knots[seg + 1].first) ++seg;
        const auto& [x0, y0] = knots[seg];
        const auto& [x1, y1] = knots[seg + 1];
        out[i] = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
    return out;
}

namespace {

// Fixed squared-exponential Gaussian-process realization on {1..100}
// (length-scale 12, centered, sample s.d. exactly 9), stored as data so the
// smooth trend is reproducible.
constexpr std::array<double, 100> kSmoothTrend = {
    -2.706960031250422, -2.763581776895546, -2.808205942606794, -2.837734367761676,
    -2.851816271733662, -2.853450464417469, -2.848787578259311, -2.847039620879762,
    -2.860136731142951, -2.902157699462306, -2.988526135056644, -3.135103581162606,
    -3.357228906112934, -3.668358682597146, -4.079179429968141, -4.596513600221259,
    -5.222385394454546, -5.953648374388373, -6.781544606818923, -7.691828979063478,
    -8.665285291000403, -9.678309352214947, -10.70413252071132, -11.71381376026238,
    -12.6777726339811, -13.5668297510398, -14.35360351377989, -15.0135002681987,
    -15.52556110966116, -15.87303853645417, -16.04376282061241, -16.03044503690274,
    -15.83050995068767, -15.44622189606015, -14.88439830474136, -14.15618618717528,
    -13.27693672255166, -12.26576227116633, -11.14534996886028, -9.941409372739539,
    -8.682016968113954, -7.397085662476641, -6.11721619496698, -4.872719744849764,
    -3.69255114405621, -2.602828652434488, -1.625709538950699, -0.7782752600850306,
    -0.07141984007194499, 0.490598855702691, 0.9107300623792998, 1.198955533208491,
    1.371815957155203, 1.451547038666846, 1.464829606197977, 1.441202776256217,
    1.411283921700233, 1.404941816317796, 1.449449463130021, 1.567659381721997,
    1.776859116436402, 2.087347296069272, 2.502088506590751, 3.016468152517544,
    3.618642542441103, 4.290463815900259, 5.008727778596442, 5.746778306611154,
    6.476317823680285, 7.169602640546018, 7.801034358098609, 8.349293825045574,
    8.798615483206927, 9.140074083620302, 9.372036376631581, 9.500439209455283,
    9.538359115597856, 9.504876916188374, 9.423825039021994, 9.321994920146164,
    9.22699106562774, 9.165242025399593, 9.159886151004832, 9.229065463732677,
    9.384471292502795, 9.630527561611176, 9.964057437113052, 10.37462360174165,
    10.84540050933562, 11.35456169907965, 11.87714526231349, 12.38681990075307,
    12.85807384323594, 13.26789181282974, 13.59732591537282, 13.83254930595911,
    13.96532314538761, 13.99314926820197, 13.91853720880232, 13.74833826021728};

double interp_smooth(double x) {
    if (x <= 1.0) return kSmoothTrend.front();
    if (x >= 100.0) return kSmoothTrend.back();
    const int lo = static_cast<int>(std::floor(x)) - 1;  // value at grid point lo+1
    const double frac = x - std::floor(x);
    return kSmoothTrend[lo] + frac * (kSmoothTrend[lo + 1] - kSmoothTrend[lo]);
}

double quad_cubic_raw(double x) {
    if (x <= 40.0) return -std::pow(x - 20.0, 3);
    if (x <= 50.0) return 60.0 * (x - 50.0) * (x - 50.0) - 14000.0;
    if (x <= 70.0) return 20.0 * (x - 50.0) * (x - 50.0) - 14000.0;
    return (1.0 / 6.0) * std::pow(x - 110.0, 3) + 14000.0 / 3.0;
}

double quad_cubic_scale() {
    // scale factor pinning the {1..100} evaluation to sample s.d. 9
    static const double scale = [] {
        double sum = 0.0, sumsq = 0.0;
        for (int i = 1; i <= 100; ++i) {
            const double v = quad_cubic_raw(static_cast<double>(i));
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / 100.0;
        const double var = (sumsq - 100.0 * mean * mean) / 99.0;
        return 9.0 / std::sqrt(var);
    }();
    return scale;
}

}  // namespace

Vector generate_trend(TrendKind kind, const Vector& grid) {
    Vector out(grid.size());
    switch (kind) {
        case TrendKind::piecewise_linear:
            return piecewise_linear_trend(grid, {{0.0, 0.0}, {35.0, 35.0}, {70.0, 0.0}, {100.0, 15.0}});
        case TrendKind::smooth_trend:
            for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = interp_smooth(grid[i]);
            return out;
        case TrendKind::sinusoid:
            for (Eigen::Index i = 0; i < grid.size(); ++i) {
                out[i] = 13.0 * std::sin(4.0 * M_PI * grid[i] / 100.0);
            }
            return out;
        case TrendKind::piecewise_quad_cubic: {
            const double sc = quad_cubic_scale();
            for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = sc * quad_cubic_raw(grid[i]);
            return out;
        }
        case TrendKind::inc_sinusoid:
            for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = grid[i] + std::sin(grid[i]);
            return out;
        case TrendKind::convex_linear:
            for (Eigen::Index i = 0; i < grid.size(); ++i) {
                const double x = grid[i];
                out[i] = x <= 2.0 ? 10.0 - 5.0 * x : (x <= 8.0 ? 0.0 : 5.0 * x - 40.0);
            }
            return out;
        case TrendKind::truncated_cubic:
            for (Eigen::Index i = 0; i < grid.size(); ++i) {
                const double x = grid[i];
                out[i] = x <= 5.0 ? 0.0 : 0.1 * std::pow(x - 5.0, 3);
            }
            return out;
        case TrendKind::logarithm:
            for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = 5.0 * std::log(1.0 + grid[i]);
            return out;
    }
    throw UnknownTrend("unknown trend kind");
}

Vector default_grid(TrendKind kind, int n) {
    Vector grid(n);
    if (is_shape_trend(kind)) {
        for (int i = 0; i < n; ++i) grid[i] = 10.0 * (i + 1) / n;
    } else {
        for (int i = 0; i < n; ++i) grid[i] = i + 1.0;
    }
    return grid;
}

Vector uniform_random_grid(TrendKind kind, int n, std::uint64_t seed) {
    const double span = is_shape_trend(kind) ? 10.0 : 100.0;
    Rng rng(seed);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = span * rng.uniform();
    std::sort(xs.begin(), xs.end());
    return Eigen::Map<const Vector>(xs.data(), n);
}

TrendData simulate(const Vector& grid, const Vector& trend, double sigma, std::uint64_t seed) {
    if (grid.size() != trend.size()) throw DimMismatch("simulate: grid/trend length mismatch");
    if (!(sigma > 0.0)) throw InvalidConfig("simulate: sigma must be positive");
    Rng rng(seed);
    std::vector<std::pair<double, double>> pts(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        pts[i] = {grid[i], trend[i] + sigma * rng.normal()};
    }
    return aggregate(pts);
}

TrendData load_csv(std::istream& in) {
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip BOM/whitespace/CR
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) start += 3;
        const std::string body = line.substr(start);
        if (body.empty() || body[0] == '#') continue;
        const std::size_t comma = body.find(',');
        if (comma == std::string::npos) throw ParseError("csv: expected two comma-separated columns");
        try {
            std::size_t used = 0;
            const double x = std::stod(body.substr(0, comma), &used);
            const double y = std::stod(body.substr(comma + 1), &used);
            pts.emplace_back(x, y);
        } catch (const std::exception&) {
            if (lineno == 1) continue;  // header row
            throw ParseError("csv: malformed numeric value on line " + std::to_string(lineno));
        }
    }
    if (pts.empty()) throw EmptyData("csv: no data rows");
    return aggregate(pts);
}

TrendData load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load_csv(in);
}

void save_csv(std::ostream& out, const TrendData& data) {
    out << "x,y\n" << std::setprecision(17);
    for (const auto& [x, y] : flatten(data)) out << x << ',' << y << '\n';
}

void save_csv_file(const std::string& path, const TrendData& data) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    save_csv(out, data);
}

}  // namespace proxtrend
