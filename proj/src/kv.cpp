#include "wavblur/kv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wavblur/errors.hpp"

namespace wavblur {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KvMap parse_kv(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t sep = line.find_first_of(" \t");
        if (sep == std::string::npos)
            throw ParseError("key without value", lineno, static_cast<int>(line.size()));
        std::string key = line.substr(0, sep);
        std::string value = trim(line.substr(sep + 1));
        kv[key] = value;
    }
    return kv;
}

KvMap load_kv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv(buf.str());
}

std::string format_kv(const KvMap& kv) {
    std::ostringstream out;
    for (const auto& [key, value] : kv) out << key << " " << value << "\n";
    return out.str();
}

bool kv_has(const KvMap& kv, const std::string& key) { return kv.count(key) > 0; }

std::string kv_string(const KvMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key " + key, 0, 0);
    return it->second;
}

double kv_double(const KvMap& kv, const std::string& key) {
    const std::string s = kv_string(kv, key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ParseError("key " + key + " is not a number: " + s, 0, 0);
    return v;
}

long kv_long(const KvMap& kv, const std::string& key) {
    const std::string s = kv_string(kv, key);
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ParseError("key " + key + " is not an integer: " + s, 0, 0);
    return v;
}

}  // namespace wavblur
