// spectra: command-line front end for finite-level spectral analysis of
// pseudo-differential operators on p-adic integer groups and compact
// Vilenkin (product) groups. Every subcommand is a thin orchestration over
// the library; results land in a hashed, reproducible output bundle.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "spectra/persist.hpp"
#include "spectra/spectral.hpp"
#include "spectra/version.hpp"

using namespace spectra;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- options --

struct Options {
    std::string group;          // p2d1 | v2,3,2
    int level = -1;
    std::string levels;         // "A..B"
    std::string symbol;         // expression text
    std::string builtin;        // name:key=value
    std::string csv;            // symbol CSV path
    std::string symbol2, builtin2, csv2;
    std::string input;          // grid function JSON (apply)
    std::string out;            // bundle directory
    std::string config;         // config file
    bool json = false;
    std::int64_t max_m = kDefaultMatrixCap;
    int trials = 100;
    std::uint64_t seed = 20240801;
    double gamma = 2.0, r = 2.0, w = 2.0, r2 = 2.0;
    double s_from = 0.0, s_to = 0.0;
    double lambda_re = 0.0, lambda_im = 0.0;
    int shell_min = 0;
    std::string cutoffs;        // comma list
    double hm = 0.0, rho = 1.0, hdelta = 0.0;
    int alpha_max = 2, beta_max = 1;
    std::string scale = "vladimirov";
    std::string bundle_dir;     // verify positional
};

struct OptionBinding {
    CLI::Option* opt;
    std::function<void(const std::string&)> set;
};

using Registry = std::map<std::string, OptionBinding>;

void add_common(CLI::App* cmd, Options& o, Registry& reg) {
    auto bind = [&reg](const std::string& key, CLI::Option* opt, auto* target) {
        reg[key] = {opt, [target](const std::string& text) {
                        if constexpr (std::is_same_v<std::decay_t<decltype(*target)>, std::string>) {
                            *target = text;
                        } else if constexpr (std::is_same_v<std::decay_t<decltype(*target)>, bool>) {
                            *target = text == "1" || text == "true" || text == "yes";
                        } else if constexpr (std::is_integral_v<std::decay_t<decltype(*target)>>) {
                            *target = static_cast<std::decay_t<decltype(*target)>>(
                                std::stoll(text));
                        } else {
                            *target = std::stod(text);
                        }
                    }};
    };

    bind("group", cmd->add_option("--group", o.group, "group: p<P>d<D> or v<m0>,<m1>,..."), &o.group);
    bind("level", cmd->add_option("--level", o.level, "truncation level N"), &o.level);
    bind("levels", cmd->add_option("--levels", o.levels, "level range A..B"), &o.levels);
    bind("symbol", cmd->add_option("--symbol", o.symbol, "symbol expression"), &o.symbol);
    bind("builtin", cmd->add_option("--builtin", o.builtin,
                                    "builtin symbol: vladimirov:s=S | bessel:s=S | "
                                    "mult:g=EXPR | radial:v=v0,v1,..."),
         &o.builtin);
    bind("csv", cmd->add_option("--csv", o.csv, "symbol CSV (x_index,dual_dft_index,re,im)"), &o.csv);
    bind("out", cmd->add_option("--out", o.out, "output bundle directory"), &o.out);
    bind("json", cmd->add_flag("--json", o.json, "machine JSON on stdout"), &o.json);
    bind("max-m", cmd->add_option("--max-m", o.max_m, "dense M x M cap (default 1024)"), &o.max_m);
    cmd->add_option("--config", o.config, "flat key=value config file; flags override");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void apply_config_file(const std::string& path, Registry& reg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = reg.find(key);
        if (it == reg.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (it->second.opt->count() == 0) it->second.set(value);  // flags win
    }
}

// ----------------------------------------------------------------- parsing --

GroupDescriptor parse_group(const std::string& text) {
    if (text.empty()) throw ConfigError("--group is required");
    if (text[0] == 'p') {
        const auto d_at = text.find('d');
        if (d_at == std::string::npos) throw ConfigError("padic group syntax is p<P>d<D>");
        try {
            return GroupDescriptor::padic(std::stoll(text.substr(1, d_at - 1)),
                                          std::stoi(text.substr(d_at + 1)));
        } catch (const std::logic_error&) {
            throw ConfigError("cannot parse group '" + text + "'");
        }
    }
    if (text[0] == 'v') {
        std::vector<std::int64_t> factors;
        try {
            for (const std::string& f : split(text.substr(1), ',')) factors.push_back(std::stoll(f));
        } catch (const std::logic_error&) {
            throw ConfigError("cannot parse group '" + text + "'");
        }
        return GroupDescriptor::vilenkin(std::move(factors));
    }
    throw ConfigError("group must start with 'p' or 'v': " + text);
}

std::vector<int> parse_levels(const Options& o) {
    std::vector<int> out;
    if (!o.levels.empty()) {
        const auto dots = o.levels.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoi(o.levels));
            } else {
                const int a = std::stoi(o.levels.substr(0, dots));
                const int b = std::stoi(o.levels.substr(dots + 2));
                if (a < 0 || b < a) throw ConfigError("invalid level range '" + o.levels + "'");
                for (int n = a; n <= b; ++n) out.push_back(n);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("invalid level range '" + o.levels + "'");
        }
        return out;
    }
    if (o.level < 0) throw ConfigError("--level or --levels is required");
    out.push_back(o.level);
    return out;
}

struct BuiltinSpec {
    std::string name;
    std::map<std::string, std::string> params;
};

BuiltinSpec parse_builtin(const std::string& text) {
    BuiltinSpec b;
    const auto colon = text.find(':');
    b.name = text.substr(0, colon);
    if (colon != std::string::npos) {
        const std::string rest = text.substr(colon + 1);
        const auto eq = rest.find('=');
        if (eq == std::string::npos) throw ConfigError("builtin parameters are key=value");
        b.params[rest.substr(0, eq)] = rest.substr(eq + 1);
    }
    return b;
}

using SymbolFactory = std::function<SymbolGrid(const Level&)>;

SymbolFactory symbol_factory(const std::string& symbol, const std::string& builtin,
                             const std::string& csv, std::int64_t max_m) {
    const int given = (!symbol.empty()) + (!builtin.empty()) + (!csv.empty());
    if (given != 1)
        throw ConfigError("exactly one of --symbol, --builtin, --csv is required");
    if (!symbol.empty()) {
        SymbolExpr e = parse_symbol(symbol);
        return [e, max_m](const Level& lv) { return eval_grid(e, lv, max_m); };
    }
    if (!csv.empty()) {
        return [csv, max_m](const Level& lv) { return import_symbol_csv(csv, lv, max_m); };
    }
    BuiltinSpec b = parse_builtin(builtin);
    auto need = [&b](const char* key) -> const std::string& {
        auto it = b.params.find(key);
        if (it == b.params.end())
            throw ConfigError("builtin '" + b.name + "' needs parameter '" + key + "'");
        return it->second;
    };
    if (b.name == "vladimirov") {
        const double s = std::stod(need("s"));
        return [s, max_m](const Level& lv) { return builtin_vladimirov(lv, s, max_m); };
    }
    if (b.name == "bessel") {
        const double s = std::stod(need("s"));
        return [s, max_m](const Level& lv) { return builtin_bessel(lv, s, max_m); };
    }
    if (b.name == "mult") {
        SymbolExpr g = parse_symbol(need("g"));
        return [g, max_m](const Level& lv) { return builtin_mult(lv, g, max_m); };
    }
    if (b.name == "radial") {
        std::vector<double> vals;
        for (const std::string& v : split(need("v"), ',')) vals.push_back(std::stod(v));
        return [vals, max_m](const Level& lv) { return builtin_radial(lv, vals, max_m); };
    }
    throw ConfigError("unknown builtin '" + b.name + "'");
}

std::string symbol_label(const Options& o) {
    if (!o.symbol.empty()) return o.symbol;
    if (!o.builtin.empty()) return o.builtin;
    return o.csv;
}

FrequencyScale parse_scale(const std::string& s) {
    if (s == "bracket") return FrequencyScale::bracket;
    if (s == "vladimirov") return FrequencyScale::vladimirov;
    throw ConfigError("scale must be 'bracket' or 'vladimirov'");
}

// ---------------------------------------------------------------- plumbing --

int thread_budget() {
    if (const char* env = std::getenv("SPECTRA_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs `job(level_index)` over all levels, at most SPECTRA_THREADS at a time.
void for_each_level(std::size_t count, const std::function<void(std::size_t)>& job) {
    const int threads = std::min<int>(thread_budget(), static_cast<int>(count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

JsonValue config_echo(const Options& o, const std::string& op) {
    JsonValue j = JsonValue::object();
    j["op"] = op;
    j["group"] = o.group;
    if (!o.levels.empty())
        j["levels"] = o.levels;
    else if (o.level >= 0)
        j["level"] = std::int64_t{o.level};
    if (!o.symbol.empty()) j["symbol"] = o.symbol;
    if (!o.builtin.empty()) j["builtin"] = o.builtin;
    if (!o.csv.empty()) j["csv"] = o.csv;
    return j;
}

Report base_report(const std::string& op, const Options& o, int level) {
    Report r;
    r.op = op;
    r.level = level;
    r.inputs = config_echo(o, op);
    return r;
}

/// Per-level output file: a report pair, raw bytes, or a file already written
/// to disk by the level job (hashed when the manifest is assembled).
struct Output {
    std::string stem;        // relative path without extension for reports
    std::optional<Report> report;
    std::string raw_name;    // used when report is absent
    std::string raw_bytes;
    bool hashed = true;
    bool existing = false;   // raw_name points at an already-written file
};

void emit(Bundle& bundle, const std::vector<Output>& outputs, bool to_stdout) {
    for (const Output& out : outputs) {
        if (out.report) {
            bundle.add_report(out.stem, *out.report);
            if (to_stdout) std::cout << report_json(*out.report);
        } else if (out.existing) {
            bundle.add_existing(out.raw_name);
        } else {
            bundle.add_bytes(out.raw_name, out.raw_bytes, out.hashed);
        }
    }
}

void print_table(const Report& r) {
    std::cout << r.op << " (level " << r.level << ")";
    if (!r.verdict.empty()) std::cout << "  verdict: " << r.verdict;
    std::cout << "\n";
    for (std::size_t i = 0; i < r.columns.size(); ++i)
        std::cout << (i ? "," : "  ") << r.columns[i];
    std::cout << "\n";
    for (const auto& row : r.rows) {
        std::cout << "  ";
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) std::cout << ",";
            std::cout << detail::cell_text(row[i]);
        }
        std::cout << "\n";
    }
}

double stod_checked(const std::string& s, const char* what) {
    try {
        return std::stod(s);
    } catch (const std::logic_error&) {
        throw ConfigError(std::string("cannot parse ") + what + " '" + s + "'");
    }
}

// --------------------------------------------------------------- commands --

/// Verdict over the two largest levels: "bounded" when every s-row moved by
/// less than 10%, "inconclusive" with one level.
std::string stability_verdict(const std::vector<std::vector<double>>& norms_by_level) {
    if (norms_by_level.size() < 2) return "inconclusive";
    const auto& prev = norms_by_level[norms_by_level.size() - 2];
    const auto& last = norms_by_level.back();
    for (std::size_t i = 0; i < last.size(); ++i) {
        const double ref = std::max({prev[i], last[i], 1e-300});
        if (std::abs(last[i] - prev[i]) / ref >= 0.10) return "unbounded";
    }
    return "bounded";
}

int cmd_compute(const std::string& op, Options& o) {
    if (o.out.empty()) throw ConfigError("--out is required");
    const GroupDescriptor group = parse_group(o.group);
    const std::vector<int> levels = parse_levels(o);
    const bool multi = levels.size() > 1;

    Bundle bundle(o.out, config_echo(o, op));
    std::vector<std::vector<Output>> per_level(levels.size());

    auto level_prefix = [&](std::size_t i) {
        return multi ? "N" + std::to_string(levels[i]) + "/" : std::string{};
    };

    // cross-level summaries
    std::vector<std::vector<double>> residual_norms(levels.size());
    std::vector<double> gohberg_history(levels.size(), 0.0);
    std::vector<double> weyl_slopes(levels.size(), 0.0);

    SymbolFactory symbols, symbols2;
    if (op != "transform-bench")
        symbols = symbol_factory(o.symbol, o.builtin, o.csv, o.max_m);
    if (op == "compose-residual")
        symbols2 = symbol_factory(o.symbol2, o.builtin2, o.csv2, o.max_m);

    if (op == "hoermander") {
        // the class verdict is a statement about the whole level sequence
        HoermanderReport hr =
            hoermander_estimate(symbols, group, levels, o.hm, o.rho, o.hdelta, o.alpha_max,
                                o.beta_max, parse_scale(o.scale), o.max_m);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            Report r = base_report(op, o, levels[i]);
            r.inputs["m"] = o.hm;
            r.inputs["rho"] = o.rho;
            r.inputs["delta"] = o.hdelta;
            r.inputs["scale"] = o.scale;
            r.columns = {"alpha", "beta", "constant"};
            for (int a = 0; a <= o.alpha_max; ++a)
                for (int b = 0; b <= o.beta_max; ++b)
                    r.add_row({std::int64_t{a}, std::int64_t{b}, hr.at(i, a, b)});
            bundle.add_report(level_prefix(i) + op, r);
            if (!o.json) print_table(r);
            if (o.json) std::cout << report_json(r);
        }
        Report sum = base_report("hoermander-summary", o, levels.back());
        sum.verdict = hr.verdict;
        sum.columns = {"alpha", "beta", "cross_level_max"};
        for (int a = 0; a <= o.alpha_max; ++a)
            for (int b = 0; b <= o.beta_max; ++b)
                sum.add_row({std::int64_t{a}, std::int64_t{b},
                             hr.cross_level_max[static_cast<std::size_t>(a * (o.beta_max + 1) + b)]});
        bundle.add_report(multi ? "summary" : "hoermander-verdict", sum);
        if (!o.json) print_table(sum);
        if (o.json) std::cout << report_json(sum);
        bundle.finalize(kVersion);
        return 0;
    }

    for_each_level(levels.size(), [&](std::size_t i) {
        Level lv = make_level(group, levels[i]);
        std::vector<Output>& outs = per_level[i];
        const std::string prefix = level_prefix(i);

        auto make = [&](Report r) {
            outs.push_back(Output{prefix + op, std::move(r), {}, {}, true});
        };

        if (op == "assemble") {
            OperatorMatrix A = assemble(symbols(lv), o.max_m);
            const fs::path file = fs::path(o.out) / (prefix + "matrix.pdos");
            if (file.has_parent_path()) fs::create_directories(file.parent_path());
            save_matrix(A, file);
            outs.push_back(
                Output{{}, std::nullopt, prefix + "matrix.pdos", {}, true, /*existing=*/true});
            Report r = base_report(op, o, levels[i]);
            r.extra["m"] = lv.m();
            r.extra["frobenius_sq"] = A.frobenius_sq();
            r.extra["matrix_file"] = prefix + "matrix.pdos";
            r.columns = {"xi", "column_l2"};
            for (std::int64_t xi = 0; xi < lv.m(); ++xi)
                r.add_row({xi, A.column_norm(xi)});
            make(std::move(r));
        } else if (op == "apply") {
            if (o.input.empty()) throw ConfigError("--input grid-function JSON is required");
            nlohmann::json ij = nlohmann::json::parse(read_file_bytes(o.input), nullptr, false);
            if (ij.is_discarded()) throw FormatError(0, "input is not valid JSON");
            GridFunction f = grid_function_from_json(ij);
            if (!f.level.same_level(lv))
                throw LevelMismatch("input function level does not match --level");
            GridFunction g = apply(assemble(symbols(lv), o.max_m), f);
            outs.push_back(Output{{}, std::nullopt, prefix + "output.json",
                                  grid_function_json(g).dump() + "\n", true});
            Report r = base_report(op, o, levels[i]);
            r.extra["l2_in"] = lr_norm(f, 2.0);
            r.extra["l2_out"] = lr_norm(g, 2.0);
            r.columns = {"x", "re", "im"};
            for (std::int64_t x = 0; x < lv.m(); ++x)
                r.add_row({x, g.v[static_cast<std::size_t>(x)].real(),
                           g.v[static_cast<std::size_t>(x)].imag()});
            make(std::move(r));
        } else if (op == "spectrum") {
            EigenSpectrum es = eigenvalues(assemble(symbols(lv), o.max_m));
            Report r = base_report(op, o, levels[i]);
            r.columns = {"k", "re", "im", "abs"};
            for (std::size_t k = 0; k < es.lambda.size(); ++k)
                r.add_row({static_cast<std::int64_t>(k), es.lambda[k].real(),
                           es.lambda[k].imag(), std::abs(es.lambda[k])});
            make(std::move(r));
        } else if (op == "svd") {
            SingularSpectrum sp = singular_values(assemble(symbols(lv), o.max_m));
            Report r = base_report(op, o, levels[i]);
            r.columns = {"k", "s"};
            for (std::size_t k = 0; k < sp.s.size(); ++k)
                r.add_row({static_cast<std::int64_t>(k), sp.s[k]});
            make(std::move(r));
        } else if (op == "schatten") {
            SymbolGrid sg = symbols(lv);
            SingularSpectrum sp = singular_values(assemble(sg, o.max_m));
            Report r = base_report(op, o, levels[i]);
            r.inputs["gamma"] = o.gamma;
            r.extra["schatten_norm"] = schatten_norm(sp, o.gamma);
            r.extra["symbol_functional"] = symbol_schatten_functional(sg, o.gamma);
            HsIdentity hs = hs_identity_check(sg, o.max_m);
            r.extra["hs_lhs"] = hs.lhs;
            r.extra["hs_rhs"] = hs.rhs;
            r.extra["hs_delta"] = hs.delta;
            r.columns = {"k", "s"};
            for (std::size_t k = 0; k < sp.s.size(); ++k)
                r.add_row({static_cast<std::int64_t>(k), sp.s[k]});
            make(std::move(r));
        } else if (op == "dixmier") {
            SingularSpectrum sp = singular_values(assemble(symbols(lv), o.max_m));
            DixmierResult dx = dixmier_functional(sp);
            Report r = base_report(op, o, levels[i]);
            r.extra["dixmier_value"] = dx.value;
            r.columns = {"n", "partial_sum", "ratio"};
            for (const auto& row : dx.table) r.add_row({row.n, row.partial_sum, row.ratio});
            make(std::move(r));
        } else if (op == "lorentz") {
            SingularSpectrum sp = singular_values(assemble(symbols(lv), o.max_m));
            Report r = base_report(op, o, levels[i]);
            r.inputs["r"] = o.r;
            r.inputs["w"] = o.w;
            r.extra["lorentz_norm"] = lorentz_norm(sp, o.r, o.w);
            r.columns = {"k", "s"};
            for (std::size_t k = 0; k < sp.s.size(); ++k)
                r.add_row({static_cast<std::int64_t>(k), sp.s[k]});
            make(std::move(r));
        } else if (op == "nuclear") {
            SymbolGrid sg = symbols(lv);
            Report r = base_report(op, o, levels[i]);
            r.inputs["gamma"] = o.gamma;
            r.inputs["r2"] = o.r2;
            r.extra["nuclear_bound"] = nuclear_bound(sg, o.gamma, o.r2);
            GridFunction col = GridFunction::zeros(lv);
            r.columns = {"xi", "column_lr2"};
            for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
                for (std::int64_t x = 0; x < lv.m(); ++x)
                    col.v[static_cast<std::size_t>(x)] = sg.at(x, xi);
                r.add_row({xi, lr_norm(col, o.r2)});
            }
            make(std::move(r));
        } else if (op == "gohberg") {
            SymbolGrid sg = symbols(lv);
            GohbergTable table = gohberg_dsigma(sg);
            GohbergProbeReport probe = gohberg_bound_check(sg, o.trials, o.seed, o.max_m);
            Report r = base_report(op, o, levels[i]);
            r.inputs["trials"] = std::int64_t{o.trials};
            r.extra["d_estimate"] = table.d_estimate;
            r.extra["probe_bound"] = probe.bound;
            r.extra["min_slack"] = probe.min_slack;
            r.extra["probe_dev"] = probe.probe_dev;
            r.verdict = probe.min_slack >= -1e-9 ? "bound holds" : "bound violated";
            r.columns = {"shell", "sup_linf"};
            for (std::size_t j = 0; j < table.shell_sup.size(); ++j)
                r.add_row({static_cast<std::int64_t>(j), table.shell_sup[j]});
            gohberg_history[i] = table.d_estimate;
            make(std::move(r));
        } else if (op == "sandwich") {
            SymbolGrid sg = symbols(lv);
            SandwichReport sw = sandwich_check(assemble(sg, o.max_m), sg);
            Report r = base_report(op, o, levels[i]);
            r.extra["min_gap"] = sw.min_gap;
            r.extra["violations"] = sw.violations;
            r.extra["max_ratio"] = sw.max_ratio;
            r.extra["is_multiplier"] = sw.is_multiplier;
            if (sw.is_multiplier) r.extra["multiplier_dev"] = sw.multiplier_dev;
            r.verdict = sw.violations == 0 ? "lower bound holds" : "lower bound violated";
            r.columns = {"k", "s", "c", "gap"};
            for (std::size_t k = 0; k < sw.s.size(); ++k)
                r.add_row({static_cast<std::int64_t>(k), sw.s[k], sw.c[k], sw.s[k] - sw.c[k]});
            make(std::move(r));
        } else if (op == "fredholm") {
            SymbolGrid sg = symbols(lv);
            std::vector<int> cuts;
            if (o.cutoffs.empty()) {
                for (int n = 0; n <= lv.max_shell(); ++n) cuts.push_back(n);
            } else {
                for (const std::string& c : split(o.cutoffs, ','))
                    cuts.push_back(static_cast<int>(stod_checked(c, "cutoff")));
            }
            FredholmCloud fc = fredholm_cloud(sg, cuts);
            Report r = base_report(op, o, levels[i]);
            r.columns = {"cutoff", "cloud_size", "hausdorff_to_next"};
            for (std::size_t k = 0; k < fc.clouds.size(); ++k)
                r.add_row({static_cast<std::int64_t>(fc.cutoffs[k]),
                           static_cast<std::int64_t>(fc.clouds[k].size()),
                           k + 1 < fc.clouds.size() ? fc.successive_hausdorff[k] : 0.0});
            make(std::move(r));

            Report pts = base_report("fredholm_points", o, levels[i]);
            pts.columns = {"cutoff", "re", "im"};
            for (std::size_t k = 0; k < fc.clouds.size(); ++k)
                for (const cplx& z : fc.clouds[k])
                    pts.add_row({static_cast<std::int64_t>(fc.cutoffs[k]), z.real(), z.imag()});
            outs.push_back(Output{prefix + "fredholm_points", std::move(pts), {}, {}, true});
        } else if (op == "weyl") {
            SymbolGrid sg = symbols(lv);
            EigenSpectrum es = eigenvalues(assemble(sg, o.max_m));
            // thresholds follow the builtin order when one is given
            double order = 1.0;
            if (!o.builtin.empty()) {
                BuiltinSpec b = parse_builtin(o.builtin);
                if (auto it = b.params.find("s"); it != b.params.end())
                    order = stod_checked(it->second, "builtin order");
            }
            WeylResult wr = weyl_count(es, shell_aligned_grid(lv, order));
            Report r = base_report(op, o, levels[i]);
            const int d = group.kind == GroupKind::padic ? group.d : 1;
            r.extra["slope"] = wr.slope_valid ? JsonValue(wr.slope) : JsonValue(nullptr);
            r.extra["reference_d_over_n"] = static_cast<double>(d) / order;
            r.columns = {"t", "count"};
            for (const auto& row : wr.table) r.add_row({row.t, row.count});
            weyl_slopes[i] = wr.slope_valid ? wr.slope : 0.0;
            make(std::move(r));
        } else if (op == "sectorial") {
            SectorialResult sc = sectorial_check(symbols(lv), o.shell_min);
            Report r = base_report(op, o, levels[i]);
            r.inputs["shell_min"] = std::int64_t{o.shell_min};
            r.verdict = sc.sectorial ? "sectorial" : "not sectorial";
            r.extra["width"] = sc.width;
            r.extra["zeros"] = sc.zeros;
            r.columns = {"theta1", "theta2", "width", "samples"};
            r.add_row({sc.theta1, sc.theta2, sc.width, sc.samples});
            make(std::move(r));
        } else if (op == "compose-residual" || op == "adjoint-residual" ||
                   op == "inverse-residual") {
            SymbolGrid sg = symbols(lv);
            OperatorNormTable tbl;
            if (op == "compose-residual") {
                auto [rm, t] = compose_residual(sg, symbols2(lv), kDefaultResidualS, o.max_m);
                tbl = std::move(t);
            } else if (op == "adjoint-residual") {
                auto [rm, t] = adjoint_residual(sg, kDefaultResidualS, o.max_m);
                tbl = std::move(t);
            } else {
                auto [rm, t] = inverse_residual(sg, cplx(o.lambda_re, o.lambda_im),
                                                kDefaultResidualS, o.max_m);
                tbl = std::move(t);
            }
            residual_norms[i] = tbl.norms;
            Report r = base_report(op, o, levels[i]);
            if (op == "inverse-residual") {
                r.inputs["lambda_re"] = o.lambda_re;
                r.inputs["lambda_im"] = o.lambda_im;
            }
            if (op == "compose-residual") {
                if (!o.symbol2.empty()) r.inputs["symbol2"] = o.symbol2;
                if (!o.builtin2.empty()) r.inputs["builtin2"] = o.builtin2;
                if (!o.csv2.empty()) r.inputs["csv2"] = o.csv2;
            }
            r.columns = {"s", "l2_to_hs_norm"};
            for (std::size_t k = 0; k < tbl.s_values.size(); ++k)
                r.add_row({tbl.s_values[k], tbl.norms[k]});
            make(std::move(r));
        } else if (op == "hoermander") {
            HoermanderReport hr = hoermander_estimate(
                symbols, group, std::span<const int>(&levels[i], 1), o.hm, o.rho, o.hdelta,
                o.alpha_max, o.beta_max, parse_scale(o.scale), o.max_m);
            Report r = base_report(op, o, levels[i]);
            r.inputs["m"] = o.hm;
            r.inputs["rho"] = o.rho;
            r.inputs["delta"] = o.hdelta;
            r.inputs["scale"] = o.scale;
            r.columns = {"alpha", "beta", "constant"};
            for (int a = 0; a <= o.alpha_max; ++a)
                for (int b = 0; b <= o.beta_max; ++b)
                    r.add_row({std::int64_t{a}, std::int64_t{b}, hr.at(0, a, b)});
            make(std::move(r));
        } else if (op == "transform-bench") {
            // timings are wall-clock and excluded from hashing
            const int reps = 5;
            std::mt19937_64 rng(o.seed + static_cast<std::uint64_t>(levels[i]));
            std::normal_distribution<double> gdist;
            GridFunction f = GridFunction::zeros(lv);
            for (auto& z : f.v) z = {gdist(rng), gdist(rng)};
            auto time_ms = [&](auto&& fn, int n) {
                std::vector<double> samples;
                for (int k = 0; k < n; ++k) {
                    const auto t0 = std::chrono::steady_clock::now();
                    auto r = fn(f);
                    const auto t1 = std::chrono::steady_clock::now();
                    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                    if (r.v.empty()) std::abort();
                }
                std::sort(samples.begin(), samples.end());
                return samples[samples.size() / 2];
            };
            const double fast_ms = time_ms([](const GridFunction& g) { return forward(g); }, reps);
            const double naive_ms =
                time_ms([](const GridFunction& g) { return naive_forward(g); },
                        lv.m() >= 2048 ? 3 : reps);
            std::ostringstream csv;
            csv << "level,m,fast_ms,naive_ms,speedup\n"
                << levels[i] << ',' << lv.m() << ',' << fast_ms << ',' << naive_ms << ','
                << (fast_ms > 0 ? naive_ms / fast_ms : 0.0) << '\n';
            outs.push_back(Output{{}, std::nullopt, prefix + "timing.csv", csv.str(), false});
        } else {
            throw ConfigError("unknown subcommand '" + op + "'");
        }
    });

    for (std::size_t i = 0; i < levels.size(); ++i) {
        emit(bundle, per_level[i], false);
        if (!o.json)
            for (const Output& out : per_level[i])
                if (out.report) print_table(*out.report);
    }

    // cross-level summaries
    if ((op == "compose-residual" || op == "adjoint-residual" || op == "inverse-residual") &&
        multi) {
        Report sum = base_report(op + "-summary", o, levels.back());
        sum.columns = {"level", "s", "l2_to_hs_norm"};
        for (std::size_t i = 0; i < levels.size(); ++i)
            for (std::size_t k = 0; k < residual_norms[i].size(); ++k)
                sum.add_row({std::int64_t{levels[i]}, kDefaultResidualS[k],
                             residual_norms[i][k]});
        sum.verdict = stability_verdict(residual_norms);
        bundle.add_report("summary", sum);
        if (!o.json) print_table(sum);
    } else if (op == "gohberg" && multi) {
        // the per-level history backing the limsup estimate
        Report sum = base_report("gohberg-summary", o, levels.back());
        sum.columns = {"level", "d_estimate"};
        for (std::size_t i = 0; i < levels.size(); ++i)
            sum.add_row({std::int64_t{levels[i]}, gohberg_history[i]});
        bundle.add_report("summary", sum);
        if (!o.json) print_table(sum);
    } else if (op == "weyl" && multi) {
        Report sum = base_report("weyl-summary", o, levels.back());
        sum.columns = {"level", "slope"};
        for (std::size_t i = 0; i < levels.size(); ++i)
            sum.add_row({std::int64_t{levels[i]}, weyl_slopes[i]});
        bundle.add_report("summary", sum);
        if (!o.json) print_table(sum);
    }

    if (o.json)
        for (std::size_t i = 0; i < levels.size(); ++i) {
            for (const Output& out : per_level[i])
                if (out.report) std::cout << report_json(*out.report);
        }

    bundle.finalize(kVersion);
    return 0;
}

int cmd_verify(const Options& o) {
    const std::vector<std::string> bad = verify_bundle(o.bundle_dir);
    if (bad.empty()) {
        std::cout << "ok: all hashed files match the manifest\n";
        return 0;
    }
    for (const std::string& f : bad) std::cerr << "error[FORMAT]: hash mismatch: " << f << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-level spectral calculus for p-adic and compact Vilenkin groups"};
    app.require_subcommand(1);

    static const char* ops[] = {"assemble",         "apply",           "spectrum",
                                "svd",              "schatten",        "dixmier",
                                "lorentz",          "nuclear",         "gohberg",
                                "sandwich",         "fredholm",        "weyl",
                                "sectorial",        "hoermander",      "compose-residual",
                                "adjoint-residual", "inverse-residual", "transform-bench"};

    Options o;
    std::map<const CLI::App*, std::pair<std::string, Registry>> tables;

    for (const char* op : ops) {
        CLI::App* cmd = app.add_subcommand(op);
        Registry reg;
        add_common(cmd, o, reg);
        auto bind = [&reg](const std::string& key, CLI::Option* opt, auto* target) {
            reg[key] = {opt, [target](const std::string& text) {
                            if constexpr (std::is_same_v<std::decay_t<decltype(*target)>, std::string>)
                                *target = text;
                            else if constexpr (std::is_integral_v<std::decay_t<decltype(*target)>>)
                                *target = static_cast<std::decay_t<decltype(*target)>>(std::stoll(text));
                            else
                                *target = std::stod(text);
                        }};
        };
        const std::string name = op;
        if (name == "apply") bind("input", cmd->add_option("--input", o.input, "grid function JSON"), &o.input);
        if (name == "schatten" || name == "nuclear")
            bind("gamma", cmd->add_option("--gamma", o.gamma, "exponent"), &o.gamma);
        if (name == "lorentz") {
            bind("r", cmd->add_option("--r", o.r, "Lorentz r"), &o.r);
            bind("w", cmd->add_option("--w", o.w, "Lorentz w"), &o.w);
        }
        if (name == "nuclear") bind("r2", cmd->add_option("--r2", o.r2, "target L^r norm"), &o.r2);
        if (name == "gohberg") {
            bind("trials", cmd->add_option("--trials", o.trials, "random probes"), &o.trials);
            bind("seed", cmd->add_option("--seed", o.seed, "probe seed"), &o.seed);
        }
        if (name == "fredholm")
            bind("cutoffs", cmd->add_option("--cutoffs", o.cutoffs, "comma list of shell cutoffs"),
                 &o.cutoffs);
        if (name == "sectorial")
            bind("shell-min", cmd->add_option("--shell-min", o.shell_min, "lowest shell"),
                 &o.shell_min);
        if (name == "inverse-residual") {
            bind("lambda-re", cmd->add_option("--lambda-re", o.lambda_re, "Re lambda"), &o.lambda_re);
            bind("lambda-im", cmd->add_option("--lambda-im", o.lambda_im, "Im lambda"), &o.lambda_im);
        }
        if (name == "compose-residual") {
            bind("symbol2", cmd->add_option("--symbol2", o.symbol2, "second symbol"), &o.symbol2);
            bind("builtin2", cmd->add_option("--builtin2", o.builtin2, "second builtin"), &o.builtin2);
            bind("csv2", cmd->add_option("--csv2", o.csv2, "second symbol CSV"), &o.csv2);
        }
        if (name == "hoermander") {
            bind("m", cmd->add_option("--m", o.hm, "declared order m"), &o.hm);
            bind("rho", cmd->add_option("--rho", o.rho, "rho"), &o.rho);
            bind("delta", cmd->add_option("--delta", o.hdelta, "delta"), &o.hdelta);
            bind("alpha-max", cmd->add_option("--alpha-max", o.alpha_max, "max alpha"), &o.alpha_max);
            bind("beta-max", cmd->add_option("--beta-max", o.beta_max, "max beta"), &o.beta_max);
            bind("scale", cmd->add_option("--scale", o.scale, "bracket | vladimirov"), &o.scale);
        }
        if (name == "transform-bench")
            bind("seed", cmd->add_option("--seed", o.seed, "input seed"), &o.seed);
        tables[cmd] = {name, std::move(reg)};
    }

    CLI::App* verify = app.add_subcommand("verify", "recompute manifest hashes");
    verify->add_option("bundle", o.bundle_dir, "bundle directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error[CONFIG]: " << e.what() << "\n";
        return 1;
    }

    try {
        if (verify->parsed()) return cmd_verify(o);
        for (auto& [cmd, entry] : tables) {
            if (!cmd->parsed()) continue;
            if (!o.config.empty()) apply_config_file(o.config, entry.second);
            return cmd_compute(entry.first, o);
        }
        std::cerr << "error[CONFIG]: no subcommand\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return e.exit_class();
    } catch (const std::exception& e) {
        std::cerr << "error[INTERNAL]: " << e.what() << "\n";
        return 2;
    }
}
