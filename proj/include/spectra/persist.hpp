#pragma once

#include <openssl/evp.h>

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <variant>

#include "spectra/calculus.hpp"

namespace spectra {

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; big-endian hosts are not supported");

namespace detail {

/// %.17g: fixed 17-significant-digit float text, enough to round-trip binary64.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace detail

/**
 * Deterministic JSON value for reports and manifests: keys are emitted in
 * sorted order, doubles with 17 significant digits, LF-free single-line
 * encoding. Write-only; parsing external JSON goes through nlohmann.
 */
class JsonValue {
public:
    using Object = std::map<std::string, JsonValue>;
    using Array = std::vector<JsonValue>;

    JsonValue() : v_(nullptr) {}
    JsonValue(std::nullptr_t) : v_(nullptr) {}
    JsonValue(bool b) : v_(b) {}
    JsonValue(double d) : v_(d) {}
    JsonValue(std::int64_t i) : v_(i) {}
    JsonValue(int i) : v_(static_cast<std::int64_t>(i)) {}
    JsonValue(const char* s) : v_(std::string(s)) {}
    JsonValue(std::string s) : v_(std::move(s)) {}
    JsonValue(Object o) : v_(std::move(o)) {}
    JsonValue(Array a) : v_(std::move(a)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }

    JsonValue& operator[](const std::string& key) { return std::get<Object>(v_)[key]; }
    void push_back(JsonValue v) { std::get<Array>(v_).push_back(std::move(v)); }

    void dump(std::ostream& os) const {
        if (std::holds_alternative<std::nullptr_t>(v_)) {
            os << "null";
        } else if (std::holds_alternative<bool>(v_)) {
            os << (std::get<bool>(v_) ? "true" : "false");
        } else if (std::holds_alternative<std::int64_t>(v_)) {
            os << std::get<std::int64_t>(v_);
        } else if (std::holds_alternative<double>(v_)) {
            os << detail::format_double(std::get<double>(v_));
        } else if (std::holds_alternative<std::string>(v_)) {
            os << '"' << detail::json_escape(std::get<std::string>(v_)) << '"';
        } else if (std::holds_alternative<Array>(v_)) {
            os << '[';
            const auto& a = std::get<Array>(v_);
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (i) os << ',';
                a[i].dump(os);
            }
            os << ']';
        } else {
            os << '{';
            const auto& o = std::get<Object>(v_);
            bool first = true;
            for (const auto& [k, val] : o) {
                if (!first) os << ',';
                first = false;
                os << '"' << detail::json_escape(k) << "\":";
                val.dump(os);
            }
            os << '}';
        }
    }

    std::string dump() const {
        std::ostringstream os;
        dump(os);
        return os.str();
    }

private:
    std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Object, Array> v_;
};

// --- group descriptor (+ level) JSON ----------------------------------------

inline JsonValue descriptor_json(const GroupDescriptor& g, int n) {
    JsonValue j = JsonValue::object();
    j["N"] = std::int64_t{n};
    if (g.kind == GroupKind::padic) {
        j["kind"] = "padic";
        j["p"] = g.p;
        j["d"] = std::int64_t{g.d};
    } else {
        j["kind"] = "vilenkin_product";
        JsonValue f = JsonValue::array();
        for (std::int64_t m : g.factors) f.push_back(m);
        j["factors"] = std::move(f);
    }
    return j;
}

/// Parses {"kind","p","d","factors","N"}; unknown keys rejected.
inline Level level_from_json(const nlohmann::json& j) {
    for (const auto& [key, _] : j.items())
        if (key != "kind" && key != "p" && key != "d" && key != "factors" && key != "N")
            throw FormatError(0, "unknown descriptor key '" + key + "'");
    if (!j.contains("kind") || !j.contains("N"))
        throw FormatError(0, "descriptor needs 'kind' and 'N'");
    const std::string kind = j.at("kind").get<std::string>();
    const int n = j.at("N").get<int>();
    if (kind == "padic") {
        return make_level(
            GroupDescriptor::padic(j.at("p").get<std::int64_t>(), j.value("d", 1)), n);
    }
    if (kind == "vilenkin_product") {
        return make_level(
            GroupDescriptor::vilenkin(j.at("factors").get<std::vector<std::int64_t>>()), n);
    }
    throw FormatError(0, "unknown group kind '" + kind + "'");
}

// --- binary matrix persistence ------------------------------------------------

// Layout: "PDOS" | u32 version=1 | u32 desc_len | desc JSON | u64 M |
// 2*M*M binary64 little-endian, row-major, re/im interleaved.
inline constexpr char kMatrixMagic[4] = {'P', 'D', 'O', 'S'};
inline constexpr std::uint32_t kMatrixVersion = 1;

inline void save_matrix(const OperatorMatrix& A, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    const std::string desc = descriptor_json(A.level.descriptor(), A.level.n()).dump();
    const auto desc_len = static_cast<std::uint32_t>(desc.size());
    const auto m64 = static_cast<std::uint64_t>(A.level.m());

    out.write(kMatrixMagic, 4);
    out.write(reinterpret_cast<const char*>(&kMatrixVersion), 4);
    out.write(reinterpret_cast<const char*>(&desc_len), 4);
    out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
    out.write(reinterpret_cast<const char*>(&m64), 8);

    const std::int64_t m = A.level.m();
    std::vector<double> row(static_cast<std::size_t>(2 * m));
    for (std::int64_t r = 0; r < m; ++r) {
        for (std::int64_t c = 0; c < m; ++c) {
            row[static_cast<std::size_t>(2 * c)] = A.at(r, c).real();
            row[static_cast<std::size_t>(2 * c + 1)] = A.at(r, c).imag();
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline OperatorMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    auto need = [&](void* dst, std::size_t n, std::uint64_t offset, const char* what) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw FormatError(offset, std::string("truncated while reading ") + what);
    };

    char magic[4];
    need(magic, 4, 0, "magic");
    if (std::memcmp(magic, kMatrixMagic, 4) != 0) throw FormatError(0, "magic mismatch");

    std::uint32_t version = 0;
    need(&version, 4, 4, "version");
    if (version != kMatrixVersion)
        throw FormatError(4, "unsupported version " + std::to_string(version));

    std::uint32_t desc_len = 0;
    need(&desc_len, 4, 8, "descriptor length");
    if (desc_len > (1u << 20)) throw FormatError(8, "descriptor length implausible");
    std::string desc(desc_len, '\0');
    need(desc.data(), desc_len, 12, "descriptor");

    nlohmann::json dj = nlohmann::json::parse(desc, nullptr, false);
    if (dj.is_discarded()) throw FormatError(12, "descriptor is not valid JSON");
    Level lv = level_from_json(dj);

    std::uint64_t m64 = 0;
    need(&m64, 8, 12 + desc_len, "matrix size");
    if (m64 != static_cast<std::uint64_t>(lv.m()))
        throw FormatError(12 + desc_len, "matrix size does not match the descriptor");

    const std::int64_t m = lv.m();
    OperatorMatrix A = OperatorMatrix::zeros(lv, "loaded:" + path.filename().string());
    std::vector<double> row(static_cast<std::size_t>(2 * m));
    std::uint64_t offset = 20 + desc_len;
    for (std::int64_t r = 0; r < m; ++r) {
        need(row.data(), row.size() * sizeof(double), offset, "payload");
        offset += row.size() * sizeof(double);
        for (std::int64_t c = 0; c < m; ++c)
            A.at(r, c) = {row[static_cast<std::size_t>(2 * c)],
                          row[static_cast<std::size_t>(2 * c + 1)]};
    }
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw FormatError(offset, "trailing bytes after payload");
    return A;
}

// --- grid function JSON --------------------------------------------------------

namespace detail {

inline JsonValue function_json(const Level& lv, const std::vector<cplx>& values,
                               const char* domain) {
    JsonValue j = JsonValue::object();
    j["group"] = descriptor_json(lv.descriptor(), lv.n());
    j["domain"] = domain;
    JsonValue vals = JsonValue::array();
    for (const cplx& z : values) {
        JsonValue pair = JsonValue::array();
        pair.push_back(z.real());
        pair.push_back(z.imag());
        vals.push_back(std::move(pair));
    }
    j["values"] = std::move(vals);
    return j;
}

inline std::pair<Level, std::vector<cplx>> function_from_json(const nlohmann::json& j,
                                                              const char* domain) {
    if (!j.contains("group") || !j.contains("values"))
        throw FormatError(0, "function JSON needs 'group' and 'values'");
    if (j.contains("domain") && j.at("domain").get<std::string>() != domain)
        throw FormatError(0, std::string("expected a '") + domain + "'-domain function");
    Level lv = level_from_json(j.at("group"));
    const auto& vals = j.at("values");
    if (!vals.is_array() || vals.size() != static_cast<std::size_t>(lv.m()))
        throw FormatError(0, "function has wrong number of values");
    std::vector<cplx> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const auto& pr = vals[i];
        if (!pr.is_array() || pr.size() != 2)
            throw FormatError(i, "value entries are [re, im] pairs");
        out[i] = {pr[0].get<double>(), pr[1].get<double>()};
    }
    return {std::move(lv), std::move(out)};
}

}  // namespace detail

inline JsonValue grid_function_json(const GridFunction& f) {
    return detail::function_json(f.level, f.v, "points");
}

inline GridFunction grid_function_from_json(const nlohmann::json& j) {
    auto [lv, v] = detail::function_from_json(j, "points");
    return GridFunction{std::move(lv), std::move(v)};
}

/// Spectrum values are listed in canonical dual order.
inline JsonValue spectrum_function_json(const SpectrumFunction& f) {
    return detail::function_json(f.level, f.v, "dual");
}

inline SpectrumFunction spectrum_function_from_json(const nlohmann::json& j) {
    auto [lv, v] = detail::function_from_json(j, "dual");
    return SpectrumFunction{std::move(lv), std::move(v)};
}

// --- symbol CSV import ----------------------------------------------------------

/// Reads columns x_index, dual_dft_index, re, im; requires complete M x M
/// coverage with no duplicates. Dual indices are DFT indices (the canonical
/// reindexing happens here).
inline SymbolGrid import_symbol_csv(const std::filesystem::path& path, const Level& lv,
                                    std::int64_t max_m = kDefaultMatrixCap) {
    detail::check_grid_cap(lv, max_m);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw FormatError(0, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x_index,dual_dft_index,re,im")
        throw FormatError(0, "header must be 'x_index,dual_dft_index,re,im'");

    const std::int64_t m = lv.m();
    SymbolGrid g = SymbolGrid::zeros(lv, "csv:" + path.filename().string());
    std::vector<char> seen(static_cast<std::size_t>(m * m), 0);
    std::uint64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::int64_t x, dft;
        double re, im;
        char tail;
        if (std::sscanf(line.c_str(), "%" SCNd64 ",%" SCNd64 ",%lf,%lf%c", &x, &dft, &re,
                        &im, &tail) != 4)
            throw FormatError(lineno, "expected 'x_index,dual_dft_index,re,im'");
        if (x < 0 || x >= m) throw FormatError(lineno, "x_index out of range");
        if (dft < 0 || dft >= m) throw FormatError(lineno, "dual_dft_index out of range");
        const std::int64_t xi = lv.canonical_of_dft(static_cast<std::uint64_t>(dft));
        auto& flag = seen[static_cast<std::size_t>(xi * m + x)];
        if (flag)
            throw FormatError(lineno, "duplicate cell (x=" + std::to_string(x) +
                                          ", dft=" + std::to_string(dft) + ")");
        flag = 1;
        g.at(x, xi) = {re, im};
    }
    for (std::int64_t xi = 0; xi < m; ++xi)
        for (std::int64_t x = 0; x < m; ++x)
            if (!seen[static_cast<std::size_t>(xi * m + x)])
                throw FormatError(lineno, "missing cell (x=" + std::to_string(x) + ", dft=" +
                                              std::to_string(lv.dft_index(xi)) + ")");
    return g;
}

// --- generic reports -------------------------------------------------------------

/// Tabular analysis report: one JSON document plus a CSV of the table.
struct Report {
    std::string op;
    JsonValue inputs = JsonValue::object();   // echoed parameters
    int level = 0;
    JsonValue extra = JsonValue::object();    // op-specific scalars
    std::string verdict;                      // optional

    std::vector<std::string> columns;
    using Cell = std::variant<std::int64_t, double, std::string>;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> cells) { rows.push_back(std::move(cells)); }
};

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string cell_text(const Report::Cell& c) {
    if (std::holds_alternative<std::int64_t>(c)) return std::to_string(std::get<std::int64_t>(c));
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    return csv_quote(std::get<std::string>(c));
}

}  // namespace detail

inline std::string report_csv(const Report& r) {
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) out += ',';
        out += detail::csv_quote(r.columns[i]);
    }
    out += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += detail::cell_text(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string report_json(const Report& r) {
    JsonValue j = JsonValue::object();
    j["op"] = r.op;
    j["level"] = std::int64_t{r.level};
    j["inputs"] = r.inputs;
    if (!r.verdict.empty()) j["verdict"] = r.verdict;
    j["extra"] = r.extra;

    JsonValue table = JsonValue::object();
    JsonValue cols = JsonValue::array();
    for (const auto& c : r.columns) cols.push_back(c);
    table["columns"] = std::move(cols);
    JsonValue rows = JsonValue::array();
    for (const auto& row : r.rows) {
        JsonValue jr = JsonValue::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<std::int64_t>(cell))
                jr.push_back(std::get<std::int64_t>(cell));
            else if (std::holds_alternative<double>(cell))
                jr.push_back(std::get<double>(cell));
            else
                jr.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(jr));
    }
    table["rows"] = std::move(rows);
    j["table"] = std::move(table);
    return j.dump() + "\n";
}

// --- hashing and bundles -----------------------------------------------------------

inline std::string sha256_hex(std::span<const char> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("SHA-256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/**
 * Output bundle: a directory of reports plus manifest.json listing every
 * hashed file. Content is deterministic (no wall-clock anywhere); files added
 * with hashed=false (timings) are written but not listed in the manifest.
 */
class Bundle {
public:
    explicit Bundle(std::filesystem::path dir, JsonValue config_echo = JsonValue::object())
        : dir_(std::move(dir)), config_(std::move(config_echo)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create bundle directory '" + dir_.string() + "'");
    }

    const std::filesystem::path& dir() const { return dir_; }

    void add_bytes(const std::string& rel, std::string_view bytes, bool hashed = true) {
        const std::filesystem::path p = dir_ / rel;
        if (p.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(p.parent_path(), ec);
        }
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to '" + p.string() + "'");
        if (hashed) hashes_[rel] = sha256_hex({bytes.data(), bytes.size()});
    }

    void add_report(const std::string& stem, const Report& r) {
        add_bytes(stem + ".json", report_json(r));
        add_bytes(stem + ".csv", report_csv(r));
    }

    void add_existing(const std::string& rel) {
        const std::string bytes = read_file_bytes(dir_ / rel);
        hashes_[rel] = sha256_hex({bytes.data(), bytes.size()});
    }

    void finalize(const std::string& artifact_version) {
        JsonValue m = JsonValue::object();
        m["algorithm"] = "SHA-256";
        m["artifact_version"] = artifact_version;
        m["config"] = config_;
        JsonValue files = JsonValue::array();
        for (const auto& [rel, hash] : hashes_) {
            JsonValue f = JsonValue::object();
            f["path"] = rel;
            f["sha256"] = hash;
            files.push_back(std::move(f));
        }
        m["files"] = std::move(files);
        const std::string text = m.dump() + "\n";
        std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write manifest");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }

private:
    std::filesystem::path dir_;
    JsonValue config_;
    std::map<std::string, std::string> hashes_;  // rel path -> hex digest
};

/// Recomputes manifest hashes; returns the list of mismatched / missing files.
inline std::vector<std::string> verify_bundle(const std::filesystem::path& dir) {
    std::vector<std::string> bad;
    nlohmann::json manifest =
        nlohmann::json::parse(read_file_bytes(dir / "manifest.json"), nullptr, false);
    if (manifest.is_discarded()) throw FormatError(0, "manifest.json is not valid JSON");
    for (const auto& f : manifest.at("files")) {
        const std::string rel = f.at("path").get<std::string>();
        const std::string want = f.at("sha256").get<std::string>();
        try {
            const std::string bytes = read_file_bytes(dir / rel);
            if (sha256_hex({bytes.data(), bytes.size()}) != want) bad.push_back(rel);
        } catch (const IoError&) {
            bad.push_back(rel + " (missing)");
        }
    }
    return bad;
}

}  // namespace spectra
