#pragma once

#include <map>
#include <string>

namespace wavblur {

// Line-oriented key-value text: one "key value" pair per line, keys in any
// order, '#' starts a comment, blank lines ignored. The value is the rest of
// the line after the key, trimmed. Used for kernel specs, manifests, and
// metadata blocks.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(const std::string& text);
KvMap load_kv(const std::string& path);
std::string format_kv(const KvMap& kv);

// Typed accessors; throw ParseError when the key is missing or malformed.
std::string kv_string(const KvMap& kv, const std::string& key);
double kv_double(const KvMap& kv, const std::string& key);
long kv_long(const KvMap& kv, const std::string& key);
bool kv_has(const KvMap& kv, const std::string& key);

}  // namespace wavblur
