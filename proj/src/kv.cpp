#include "agekit/kv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "agekit/errors.hpp"

namespace agekit {

namespace {

bool valid_key(std::string_view key) {
    if (key.empty()) {
        return false;
    }
    for (char ch : key) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                        (ch >= '0' && ch <= '9') || ch == '_' || ch == '.';
        if (!ok) {
            return false;
        }
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string> split_array_items(std::string_view body, const std::string& what) {
    std::vector<std::string> items;
    std::string_view inner = trim(body);
    if (inner.size() < 2 || inner.front() != '[' || inner.back() != ']') {
        throw ParseError(what + ": expected an array like [a, b, c], got '" +
                         std::string(body) + "'");
    }
    inner = trim(inner.substr(1, inner.size() - 2));
    if (inner.empty()) {
        return items;
    }
    std::size_t start = 0;
    while (start <= inner.size()) {
        std::size_t comma = inner.find(',', start);
        std::string_view item = comma == std::string_view::npos
                                    ? inner.substr(start)
                                    : inner.substr(start, comma - start);
        items.emplace_back(trim(item));
        if (items.back().empty()) {
            throw ParseError(what + ": empty array element");
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return items;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double_text(std::string_view text, const std::string& what) {
    text = trim(text);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(what + ": not a number: '" + std::string(text) + "'");
    }
    return value;
}

long long parse_i64_text(std::string_view text, const std::string& what) {
    text = trim(text);
    long long value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(what + ": not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_u64_text(std::string_view text, const std::string& what) {
    text = trim(text);
    std::uint64_t value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(what + ": not an unsigned integer: '" + std::string(text) + "'");
    }
    return value;
}

void KvDoc::add_raw(const std::string& key, std::string value) {
    if (!valid_key(key)) {
        throw InvalidArgument("kv: invalid key '" + key + "'");
    }
    if (index_.count(key) != 0) {
        throw InvalidArgument("kv: duplicate key '" + key + "'");
    }
    index_[key] = entries_.size();
    entries_.emplace_back(key, std::move(value));
}

void KvDoc::add_u64(const std::string& key, std::uint64_t v) {
    add_raw(key, std::to_string(v));
}

void KvDoc::add_i64(const std::string& key, long long v) {
    add_raw(key, std::to_string(v));
}

void KvDoc::add_double(const std::string& key, double v) {
    add_raw(key, format_double(v));
}

void KvDoc::add_token(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_of(" \t\r\n#,[]") != std::string::npos) {
        throw InvalidArgument("kv: token value for '" + key + "' must be a bare word");
    }
    add_raw(key, v);
}

void KvDoc::add_double_array(const std::string& key, const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 0) {
            out += ", ";
        }
        out += format_double(v[i]);
    }
    out += "]";
    add_raw(key, std::move(out));
}

void KvDoc::add_int_array(const std::string& key, const std::vector<long long>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 0) {
            out += ", ";
        }
        out += std::to_string(v[i]);
    }
    out += "]";
    add_raw(key, std::move(out));
}

bool KvDoc::has(const std::string& key) const {
    return index_.count(key) != 0;
}

const std::string& KvDoc::raw(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) {
        throw ParseError("missing field '" + key + "'");
    }
    return entries_[it->second].second;
}

std::uint64_t KvDoc::get_u64(const std::string& key) const {
    return parse_u64_text(raw(key), "field '" + key + "'");
}

long long KvDoc::get_i64(const std::string& key) const {
    return parse_i64_text(raw(key), "field '" + key + "'");
}

double KvDoc::get_double(const std::string& key) const {
    return parse_double_text(raw(key), "field '" + key + "'");
}

std::string KvDoc::get_token(const std::string& key) const {
    return std::string(trim(raw(key)));
}

std::vector<double> KvDoc::get_double_array(const std::string& key) const {
    const std::string what = "field '" + key + "'";
    std::vector<double> out;
    for (const auto& item : split_array_items(raw(key), what)) {
        out.push_back(parse_double_text(item, what));
    }
    return out;
}

std::vector<long long> KvDoc::get_int_array(const std::string& key) const {
    const std::string what = "field '" + key + "'";
    std::vector<long long> out;
    for (const auto& item : split_array_items(raw(key), what)) {
        out.push_back(parse_i64_text(item, what));
    }
    return out;
}

std::string KvDoc::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

KvDoc KvDoc::parse(std::string_view text) {
    KvDoc doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = eol == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        ++line_no;
        std::string_view body = trim(line);
        if (!body.empty() && body.front() != '#') {
            std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected 'key = value'");
            }
            std::string key(trim(body.substr(0, eq)));
            std::string value(trim(body.substr(eq + 1)));
            if (!valid_key(key)) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": invalid key '" + key + "'");
            }
            if (doc.index_.count(key) != 0) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": duplicate key '" + key + "'");
            }
            doc.index_[key] = doc.entries_.size();
            doc.entries_.emplace_back(std::move(key), std::move(value));
        }
        if (eol == std::string_view::npos) {
            break;
        }
        pos = eol + 1;
    }
    return doc;
}

KvDoc KvDoc::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void KvDoc::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << serialize();
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

} // namespace agekit
