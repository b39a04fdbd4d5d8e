#include "popfolio/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "popfolio/dates.hpp"
#include "popfolio/rng.hpp"
#include "popfolio/textio.hpp"

namespace popfolio {

std::size_t PricePanel::symbol_index(const std::string& sym) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == sym) return i;
    throw ContractError("symbol not in panel: " + sym);
}

std::size_t PricePanel::benchmark_index() const { return symbol_index(benchmark_symbol); }

void PricePanel::validate() const {
    if (dates.empty() || symbols.empty()) throw DataError("panel is empty");
    if (close.rows() != dates.size() || close.cols() != symbols.size() ||
        volume.rows() != dates.size() || volume.cols() != symbols.size())
        throw DataError("panel matrix shape does not match dates/symbols");
    for (std::size_t t = 1; t < dates.size(); ++t)
        if (!(dates[t - 1] < dates[t]))
            throw DataError("panel dates not strictly increasing at " + dates[t]);
    for (std::size_t t = 0; t < dates.size(); ++t)
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (!(close(t, i) > 0.0) || !std::isfinite(close(t, i)))
                throw DataError("non-positive close for " + symbols[i] + " at " + dates[t]);
            if (close.row(t).size() && (volume(t, i) < 0.0 || !std::isfinite(volume(t, i))))
                throw DataError("negative volume for " + symbols[i] + " at " + dates[t]);
        }
    bool found = false;
    for (const auto& s : symbols) found = found || (s == benchmark_symbol);
    if (!found) throw DataError("benchmark symbol missing from panel: " + benchmark_symbol);
}

namespace {

struct Row {
    std::string date;
    double close;
    double volume;
};

} // namespace

PricePanel load_panel(const std::string& path, const std::string& benchmark) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open panel file: " + path);

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw DataError("empty panel file: " + path);
    ++lineno;
    if (trim(line) != "date,symbol,close,volume")
        throw DataError(path + ":1: expected header 'date,symbol,close,volume'");

    std::map<std::string, std::map<std::string, Row>> by_symbol; // symbol -> date -> row
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto fields = split(t, ',');
        const std::string where = path + ":" + std::to_string(lineno);
        if (fields.size() != 4) throw DataError(where + ": expected 4 fields");
        Row row;
        row.date = trim(fields[0]);
        parse_date(row.date); // validates format
        const std::string sym = trim(fields[1]);
        if (sym.empty()) throw DataError(where + ": empty symbol");
        if (!parse_double(fields[2], row.close) || !(row.close > 0.0))
            throw DataError(where + ": bad close '" + fields[2] + "'");
        if (!parse_double(fields[3], row.volume) || row.volume < 0.0)
            throw DataError(where + ": bad volume '" + fields[3] + "'");
        auto& dates = by_symbol[sym];
        if (!dates.emplace(row.date, row).second)
            throw DataError(where + ": duplicate row for (" + row.date + ", " + sym + ")");
    }

    auto bench_it = by_symbol.find(benchmark);
    if (bench_it == by_symbol.end())
        throw ConfigError("benchmark symbol '" + benchmark + "' not present in " + path);
    if (bench_it->second.size() < 2)
        throw DataError("benchmark '" + benchmark + "' has fewer than 2 dates");

    // The benchmark's dates define the calendar; keep symbols covering it fully.
    std::vector<std::string> calendar;
    calendar.reserve(bench_it->second.size());
    for (const auto& [date, row] : bench_it->second) calendar.push_back(date);

    std::vector<std::string> kept;
    for (const auto& [sym, rows] : by_symbol) {
        bool complete = true;
        for (const auto& d : calendar)
            if (!rows.count(d)) { complete = false; break; }
        if (complete) kept.push_back(sym);
    }
    if (kept.empty() || calendar.empty())
        throw DataError("empty date intersection after complete-case alignment");

    PricePanel panel;
    panel.dates = calendar;
    panel.symbols = kept;
    panel.benchmark_symbol = benchmark;
    panel.close = Matrix(calendar.size(), kept.size());
    panel.volume = Matrix(calendar.size(), kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& rows = by_symbol[kept[i]];
        for (std::size_t t = 0; t < calendar.size(); ++t) {
            const Row& r = rows.at(calendar[t]);
            panel.close(t, i) = r.close;
            panel.volume(t, i) = r.volume;
        }
    }
    panel.validate();
    return panel;
}

void save_panel(const PricePanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write panel file: " + path);
    out << "date,symbol,close,volume\n";
    for (std::size_t t = 0; t < panel.dates.size(); ++t)
        for (std::size_t i = 0; i < panel.symbols.size(); ++i)
            out << panel.dates[t] << ',' << panel.symbols[i] << ','
                << format_double(panel.close(t, i)) << ','
                << format_double(panel.volume(t, i)) << '\n';
}

ReturnPanel compute_returns(const PricePanel& panel) {
    panel.validate();
    const std::size_t T = panel.dates.size();
    const std::size_t N = panel.symbols.size();
    if (T < 2) throw DataError("need at least 2 dates to compute returns");

    ReturnPanel rp;
    rp.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    rp.symbols = panel.symbols;
    rp.benchmark_index = panel.benchmark_index();
    rp.returns = Matrix(T - 1, N);
    rp.benchmark_returns.resize(T - 1);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            double r = panel.close(t, i) / panel.close(t - 1, i) - 1.0;
            r = std::clamp(r, -kReturnClip, kReturnClip);
            rp.returns(t - 1, i) = r;
        }
        rp.benchmark_returns[t - 1] = rp.returns(t - 1, rp.benchmark_index);
    }
    return rp;
}

std::vector<double> ReturnPanel::universe_returns() const {
    std::vector<double> out(dates.size(), 0.0);
    const std::size_t N = symbols.size();
    if (N == 1) {
        for (std::size_t t = 0; t < dates.size(); ++t) out[t] = returns(t, 0);
        return out;
    }
    for (std::size_t t = 0; t < dates.size(); ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            if (i != benchmark_index) s += returns(t, i);
        out[t] = s / static_cast<double>(N - 1);
    }
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

PricePanel filter_universe(const PricePanel& panel, const UniverseFilter& f) {
    panel.validate();
    if (f.min_history_days <= 0 || f.min_median_price <= 0.0 || f.max_symbols <= 0)
        throw ConfigError("universe filter fields must be positive");

    const std::size_t T = panel.dates.size();
    const std::size_t N = panel.symbols.size();
    const std::size_t bench = panel.benchmark_index();

    struct Cand {
        std::size_t idx;
        double dollar_volume;
    };
    std::vector<Cand> pass;
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> closes(T), dv(T);
        for (std::size_t t = 0; t < T; ++t) {
            closes[t] = panel.close(t, i);
            dv[t] = panel.close(t, i) * panel.volume(t, i);
        }
        const bool ok = static_cast<int>(T) >= f.min_history_days &&
                        median_of(closes) >= f.min_median_price;
        if (ok || i == bench) pass.push_back({i, median_of(dv)});
    }

    bool any_non_bench = false;
    for (const auto& c : pass) any_non_bench = any_non_bench || (c.idx != bench);
    if (!any_non_bench) throw DataError("universe filter left no symbols besides the benchmark");

    // Cap by descending median dollar volume; ties broken by symbol name.
    std::stable_sort(pass.begin(), pass.end(), [&](const Cand& a, const Cand& b) {
        if (a.dollar_volume != b.dollar_volume) return a.dollar_volume > b.dollar_volume;
        return panel.symbols[a.idx] < panel.symbols[b.idx];
    });
    const std::size_t cap = static_cast<std::size_t>(f.max_symbols);
    std::set<std::size_t> keep;
    keep.insert(bench);
    for (const auto& c : pass) {
        if (keep.size() >= cap && !keep.count(c.idx)) continue;
        keep.insert(c.idx);
        if (keep.size() >= cap) break;
    }

    PricePanel out;
    out.dates = panel.dates;
    out.benchmark_symbol = panel.benchmark_symbol;
    for (std::size_t i = 0; i < N; ++i)
        if (keep.count(i)) out.symbols.push_back(panel.symbols[i]);
    out.close = Matrix(T, out.symbols.size());
    out.volume = Matrix(T, out.symbols.size());
    std::size_t col = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (!keep.count(i)) continue;
        for (std::size_t t = 0; t < T; ++t) {
            out.close(t, col) = panel.close(t, i);
            out.volume(t, col) = panel.volume(t, i);
        }
        ++col;
    }
    out.validate();
    return out;
}

PricePanel generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.horizon_days <= 0) throw ConfigError("synthetic horizon must be positive");
    if (spec.vol < 0.0 || spec.benchmark_vol < 0.0) throw ConfigError("synthetic vol must be >= 0");
    if (spec.n_symbols < 1) throw ConfigError("synthetic panel needs at least 1 symbol");
    for (const auto& seg : spec.segments) {
        if (seg.vol < 0.0) throw ConfigError("synthetic segment vol must be >= 0");
        if (seg.end_day <= seg.start_day) throw ConfigError("synthetic segment range is empty");
    }

    const int T = spec.horizon_days;
    const int N = spec.n_symbols;
    PricePanel panel;
    panel.benchmark_symbol = spec.benchmark_symbol;
    panel.symbols.reserve(N + 1);
    for (int i = 0; i < N; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "S%02d", i);
        panel.symbols.emplace_back(buf);
    }
    panel.symbols.push_back(spec.benchmark_symbol);

    panel.dates.reserve(T);
    std::int64_t d = parse_date(spec.start_date);
    if (weekday(d) >= 5) d = next_weekday(d);
    for (int t = 0; t < T; ++t) {
        panel.dates.push_back(format_date(d));
        d = next_weekday(d);
    }

    const std::size_t cols = panel.symbols.size();
    panel.close = Matrix(T, cols);
    panel.volume = Matrix(T, cols);

    Rng rng(derive_seed(seed, 0x70616e656cULL)); // "panel" stream
    std::vector<double> price(cols, spec.start_price);
    const double load = std::clamp(spec.factor_loading, 0.0, 1.0);
    const double idio = std::sqrt(std::max(0.0, 1.0 - load * load));

    for (int t = 0; t < T; ++t) {
        double drift = spec.drift;
        double vol = spec.vol;
        for (const auto& seg : spec.segments)
            if (t >= seg.start_day && t < seg.end_day) {
                drift = seg.drift;
                vol = seg.vol;
            }
        const double factor = rng.normal();
        for (int i = 0; i < N; ++i) {
            const double eps = load * factor + idio * rng.normal();
            const double r = std::max(drift + vol * eps, -0.95);
            price[i] *= 1.0 + r;
            panel.close(t, i) = price[i];
            panel.volume(t, i) = std::floor(1e6 * (1.0 + 0.2 * rng.uniform01()));
        }
        const double beps = load * factor + idio * rng.normal();
        const double br = std::max(spec.benchmark_drift + spec.benchmark_vol * beps, -0.95);
        price[N] *= 1.0 + br;
        panel.close(t, N) = price[N];
        panel.volume(t, N) = std::floor(5e6 * (1.0 + 0.2 * rng.uniform01()));
    }
    panel.validate();
    return panel;
}

} // namespace popfolio
