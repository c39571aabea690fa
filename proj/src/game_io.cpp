#include "firesale/game_io.hpp"

#include "firesale/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace firesale {

std::string Diagnostic::format() const {
    std::ostringstream os;
    os << source;
    if (line > 0) {
        os << ':' << line << ':' << column;
    }
    os << ": ";
    if (!path.empty()) {
        os << path << ": ";
    }
    os << message;
    return os.str();
}

namespace detail {

namespace {

// Recursive scan of a JSON text that is already known to be valid.
class Scanner {
public:
    Scanner(const std::string& text, std::vector<std::pair<std::string, std::size_t>>& out)
        : s_(text), out_(out) {}

    void run() {
        skipWs();
        value("");
    }

private:
    void skipWs() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    std::string string() {
        std::string out;
        ++pos_; // opening quote
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\') {
                ++pos_;
            }
            if (pos_ < s_.size()) {
                out.push_back(s_[pos_]);
            }
            ++pos_;
        }
        ++pos_; // closing quote
        return out;
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "/" + key;
    }

    void value(const std::string& path) {
        out_.emplace_back(path, pos_);
        if (pos_ >= s_.size()) {
            return;
        }
        const char c = s_[pos_];
        if (c == '{') {
            ++pos_;
            skipWs();
            while (pos_ < s_.size() && s_[pos_] != '}') {
                const std::string key = string();
                skipWs();
                ++pos_; // colon
                skipWs();
                value(join(path, key));
                skipWs();
                if (pos_ < s_.size() && s_[pos_] == ',') {
                    ++pos_;
                    skipWs();
                }
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skipWs();
            std::size_t idx = 0;
            while (pos_ < s_.size() && s_[pos_] != ']') {
                value(join(path, std::to_string(idx++)));
                skipWs();
                if (pos_ < s_.size() && s_[pos_] == ',') {
                    ++pos_;
                    skipWs();
                }
            }
            ++pos_;
        } else if (c == '"') {
            string();
        } else {
            while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
            }
        }
    }

    const std::string& s_;
    std::vector<std::pair<std::string, std::size_t>>& out_;
    std::size_t pos_ = 0;
};

} // namespace

JsonLineIndex::JsonLineIndex(const std::string& text) {
    lineStarts_.push_back(0);
    for (std::size_t k = 0; k < text.size(); ++k) {
        if (text[k] == '\n') {
            lineStarts_.push_back(k + 1);
        }
    }
    Scanner(text, entries_).run();
}

std::pair<std::size_t, std::size_t> JsonLineIndex::lineColumn(std::size_t offset) const {
    const auto it = std::upper_bound(lineStarts_.begin(), lineStarts_.end(), offset);
    const std::size_t line = static_cast<std::size_t>(it - lineStarts_.begin());
    return {line, offset - lineStarts_[line - 1] + 1};
}

std::pair<std::size_t, std::size_t> JsonLineIndex::locate(const std::string& path) const {
    std::string p = path;
    while (true) {
        for (const auto& [key, offset] : entries_) {
            if (key == p) {
                return lineColumn(offset);
            }
        }
        if (p.empty()) {
            return {0, 0};
        }
        const auto slash = p.rfind('/');
        p = slash == std::string::npos ? std::string() : p.substr(0, slash);
    }
}

} // namespace detail

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const std::string& text, std::string source) : index_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        const auto [line, col] = index_.locate(path);
        throw GameLoadError(Diagnostic{source_, line, col, path, message});
    }

    const json& member(const json& obj, const std::string& path, const char* key) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        const auto it = obj.find(key);
        if (it == obj.end()) {
            fail(path.empty() ? key : path + "/" + key, std::string("missing field '") + key + "'");
        }
        return *it;
    }

    void onlyFields(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        for (const auto& [key, value] : obj.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
                fail(path.empty() ? key : path + "/" + key, "unknown field '" + key + "'");
            }
        }
    }

    double number(const json& v, const std::string& path) const {
        if (!v.is_number()) {
            fail(path, "expected a number");
        }
        return v.get<double>();
    }

    const json& array(const json& v, const std::string& path) const {
        if (!v.is_array()) {
            fail(path, "expected an array");
        }
        return v;
    }

private:
    detail::JsonLineIndex index_;
    std::string source_;
};

std::string join(const std::string& path, const std::string& key) {
    return path + "/" + key;
}

PriceImpact readImpact(const Reader& r, const json& asset, const std::string& path) {
    const std::string ipath = join(path, "impact");
    const json& impact = r.member(asset, path, "impact");
    const json& kindValue = r.member(impact, ipath, "kind");
    if (!kindValue.is_string()) {
        r.fail(join(ipath, "kind"), "expected a string");
    }
    const std::string kind = kindValue.get<std::string>();
    r.onlyFields(asset, path, {"p0", "impact"});
    if (kind == "power") {
        r.onlyFields(impact, ipath, {"kind", "exponent", "scale"});
    } else if (kind == "piecewise_linear") {
        r.onlyFields(impact, ipath, {"kind", "breakpoints"});
    } else if (kind == "linear") {
        r.onlyFields(impact, ipath, {"kind"});
    }
    const bool hasP0 = asset.is_object() && asset.contains("p0");
    try {
        if (kind == "linear") {
            return PriceImpact::linear(r.number(r.member(asset, path, "p0"), join(path, "p0")));
        }
        if (kind == "power") {
            const double p0 = r.number(r.member(asset, path, "p0"), join(path, "p0"));
            const double e = r.number(r.member(impact, ipath, "exponent"), join(ipath, "exponent"));
            if (impact.contains("scale")) {
                const double scale = r.number(impact["scale"], join(ipath, "scale"));
                if (std::abs(scale - p0) > kConstraintTol * std::max(1.0, p0)) {
                    r.fail(join(ipath, "scale"), "power impact scale must equal p0 (price at kept amount 1)");
                }
            }
            return PriceImpact::powerConvex(p0, e);
        }
        if (kind == "piecewise_linear") {
            const std::string bpath = join(ipath, "breakpoints");
            const json& bps = r.array(r.member(impact, ipath, "breakpoints"), bpath);
            std::vector<Breakpoint> points;
            for (std::size_t k = 0; k < bps.size(); ++k) {
                const std::string kpath = join(bpath, std::to_string(k));
                const json& pair = r.array(bps[k], kpath);
                if (pair.size() != 2) {
                    r.fail(kpath, "breakpoint must be [kept, price]");
                }
                points.push_back({r.number(pair[0], join(kpath, "0")), r.number(pair[1], join(kpath, "1"))});
            }
            auto curve = PriceImpact::piecewiseLinear(std::move(points));
            if (hasP0) {
                const double p0 = r.number(asset["p0"], join(path, "p0"));
                if (std::abs(p0 - curve.initialPrice()) > kConstraintTol * std::max(1.0, p0)) {
                    r.fail(join(path, "p0"), "p0 does not match the curve at kept amount 1");
                }
            }
            return curve;
        }
    } catch (const GameError& e) {
        r.fail(join(path, e.field()), e.what());
    }
    r.fail(join(ipath, "kind"), "unknown impact kind '" + kind + "' (linear, power, piecewise_linear)");
}

Game readGame(const Reader& r, const json& doc) {
    if (!doc.is_object()) {
        r.fail("", "game document must be an object");
    }
    r.onlyFields(doc, "", {"agents", "assets", "alpha", "lambda"});
    const json& agentsValue = r.array(r.member(doc, "", "agents"), "agents");
    const json& assetsValue = r.array(r.member(doc, "", "assets"), "assets");
    const double alpha = r.number(r.member(doc, "", "alpha"), "alpha");
    const double lambda = r.number(r.member(doc, "", "lambda"), "lambda");

    std::vector<AssetSpec> assets;
    for (std::size_t j = 0; j < assetsValue.size(); ++j) {
        const std::string path = "assets/" + std::to_string(j);
        assets.push_back({readImpact(r, assetsValue[j], path)});
    }
    std::vector<AgentSpec> agents;
    for (std::size_t i = 0; i < agentsValue.size(); ++i) {
        const std::string path = "agents/" + std::to_string(i);
        const json& a = agentsValue[i];
        r.onlyFields(a, path, {"illiquid_assets", "liabilities", "holdings"});
        AgentSpec spec;
        spec.illiquidAssets = r.number(r.member(a, path, "illiquid_assets"), join(path, "illiquid_assets"));
        spec.liabilities = r.number(r.member(a, path, "liabilities"), join(path, "liabilities"));
        const std::string hpath = join(path, "holdings");
        const json& h = r.array(r.member(a, path, "holdings"), hpath);
        for (std::size_t j = 0; j < h.size(); ++j) {
            spec.holdings.push_back(r.number(h[j], join(hpath, std::to_string(j))));
        }
        agents.push_back(std::move(spec));
    }
    try {
        return Game(std::move(agents), std::move(assets), alpha, lambda);
    } catch (const GameError& e) {
        r.fail(e.field(), e.what());
    }
}

} // namespace

Game parseGame(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < end; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw GameLoadError(Diagnostic{source, line, col, "", std::string("malformed JSON: ") + e.what()});
    }
    const Reader reader(text, source);
    return readGame(reader, doc);
}

Game loadGame(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw GameLoadError(Diagnostic{file.string(), 0, 0, "", "cannot open file"});
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseGame(buf.str(), file.string());
}

nlohmann::json gameToJson(const Game& game) {
    json doc;
    doc["alpha"] = game.alpha();
    doc["lambda"] = game.lambda();
    doc["agents"] = json::array();
    for (const auto& a : game.agentSpecs()) {
        doc["agents"].push_back(
            {{"illiquid_assets", a.illiquidAssets}, {"liabilities", a.liabilities}, {"holdings", a.holdings}});
    }
    doc["assets"] = json::array();
    for (std::size_t j = 0; j < game.numAssets(); ++j) {
        const auto& p = game.impact(j);
        json asset;
        asset["p0"] = p.initialPrice();
        json impact;
        impact["kind"] = toString(p.kind());
        if (p.kind() == PriceImpact::Kind::PowerConvex) {
            impact["exponent"] = p.exponent();
        } else if (p.kind() == PriceImpact::Kind::PiecewiseLinear) {
            impact["breakpoints"] = json::array();
            for (const auto& bp : p.breakpoints()) {
                impact["breakpoints"].push_back({bp.kept, bp.price});
            }
        }
        asset["impact"] = impact;
        doc["assets"].push_back(asset);
    }
    return doc;
}

void saveGame(const Game& game, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write " + file.string());
    }
    out << gameToJson(game).dump(2) << '\n';
}

} // namespace firesale
