#include "toeplitz/tpv.hpp"

#include <fstream>

#include <json.hpp>

#include "toeplitz/errors.hpp"

namespace toeplitz {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr uint64_t kPlainLimit = 1ull << 16;

ordered_json encodeLevel(const Level& level) {
    ordered_json j;
    j["n"] = level.modulus;
    uint64_t runCount = 0;
    level.word.forEachRun([&](Symbol, uint64_t, uint64_t) { ++runCount; });
    // plain for short words, rle once the run list is the smaller rendering
    bool plain = level.modulus <= kPlainLimit || runCount * 8 >= level.modulus;
    if (plain) {
        j["encoding"] = "plain";
        j["word"] = level.word.toString();
    } else {
        j["encoding"] = "rle";
        ordered_json runs = ordered_json::array();
        level.word.forEachRun([&](Symbol s, uint64_t, uint64_t len) {
            runs.push_back(ordered_json::array({std::string(1, symbolChar(s)), len}));
        });
        j["word"] = std::move(runs);
    }
    return j;
}

PartialWord decodeLevel(const ordered_json& j, uint64_t n) {
    std::string encoding = j.at("encoding").get<std::string>();
    if (encoding == "plain") {
        std::string w = j.at("word").get<std::string>();
        if (w.size() != n) throw input_error("TPV level word length does not match n");
        return PartialWord(w);
    }
    if (encoding != "rle") throw input_error("TPV unknown encoding '" + encoding + "'");
    std::vector<std::pair<Symbol, uint64_t>> runs;
    for (const auto& r : j.at("word")) {
        if (!r.is_array() || r.size() != 2) throw input_error("TPV rle run must be [symbol, count]");
        std::string s = r[0].get<std::string>();
        if (s.size() != 1) throw input_error("TPV rle symbol must be one character");
        runs.push_back({symbolFromChar(s[0]), r[1].get<uint64_t>()});
    }
    PartialWord w = PartialWord::fromRuns(runs);
    if (w.size() != n) throw input_error("TPV rle runs do not sum to n");
    return w;
}

}  // namespace

std::string tpvToString(const ViablePair& pair) {
    ordered_json j;
    j["format_version"] = "TPV1";
    j["alphabet"] = "01?";
    const ConstructionMeta& m = pair.meta();
    ordered_json c;
    c["kind"] = m.kind;
    if (m.kind == "iwanik") c["poly"] = m.poly;
    else { c["k"] = m.k; c["l"] = m.l; }
    c["mode"] = m.mode;
    c["fill_policy"] = m.fillPolicy;
    c["seed"] = m.seed;
    j["construction"] = std::move(c);
    ordered_json levels = ordered_json::array();
    for (const auto& level : pair.levels()) levels.push_back(encodeLevel(level));
    j["levels"] = std::move(levels);
    j["checkpoints"] = pair.checkpoints();
    return j.dump(2) + "\n";
}

ViablePair tpvFromString(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw input_error(std::string("TPV parse error: ") + e.what());
    }
    try {
        if (j.at("format_version").get<std::string>() != "TPV1")
            throw input_error("TPV unsupported format_version");
        if (j.at("alphabet").get<std::string>() != "01?")
            throw input_error("TPV unsupported alphabet");
        ConstructionMeta meta;
        const auto& c = j.at("construction");
        meta.kind = c.at("kind").get<std::string>();
        if (meta.kind == "iwanik") meta.poly = c.at("poly").get<std::string>();
        else { meta.k = c.at("k").get<int64_t>(); meta.l = c.at("l").get<int64_t>(); }
        meta.mode = c.at("mode").get<std::string>();
        meta.fillPolicy = c.at("fill_policy").get<std::string>();
        meta.seed = c.at("seed").get<uint64_t>();
        std::vector<Level> levels;
        for (const auto& lj : j.at("levels")) {
            uint64_t n = lj.at("n").get<uint64_t>();
            levels.push_back({n, decodeLevel(lj, n)});
        }
        std::vector<uint64_t> checkpoints = j.at("checkpoints").get<std::vector<uint64_t>>();
        return ViablePair(std::move(levels), std::move(checkpoints), std::move(meta));
    } catch (const input_error&) {
        throw;
    } catch (const std::exception& e) {
        throw input_error(std::string("TPV structure error: ") + e.what());
    }
}

void tpvSave(const ViablePair& pair, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open for writing: " + path);
    out << tpvToString(pair);
    if (!out) throw input_error("write failed: " + path);
}

ViablePair tpvLoad(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return tpvFromString(text);
}

}  // namespace toeplitz
