#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agekit {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Line-oriented `key = value` document, the common on-disk format for
/// configs, checkpoints, threshold tables, and reports.
///
/// Grammar (full details in docs/FORMATS.md):
///   - UTF-8, LF newlines; one `key = value` pair per line
///   - keys match [A-Za-z0-9_.]+ and may not repeat
///   - values are a number, a bare token, or a numeric array `[a, b, c]`
///   - lines whose first non-blank character is '#' are comments
///
/// Entries keep insertion order, so serialization is byte-reproducible.
class KvDoc {
public:
    void add_raw(const std::string& key, std::string value);
    void add_u64(const std::string& key, std::uint64_t v);
    void add_i64(const std::string& key, long long v);
    void add_double(const std::string& key, double v);
    void add_token(const std::string& key, const std::string& v);
    void add_double_array(const std::string& key, const std::vector<double>& v);
    void add_int_array(const std::string& key, const std::vector<long long>& v);

    bool has(const std::string& key) const;
    /// Raw value text; throws ParseError naming the key when absent.
    const std::string& raw(const std::string& key) const;

    std::uint64_t get_u64(const std::string& key) const;
    long long get_i64(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::string get_token(const std::string& key) const;
    std::vector<double> get_double_array(const std::string& key) const;
    std::vector<long long> get_int_array(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    std::string serialize() const;

    static KvDoc parse(std::string_view text);
    static KvDoc load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Parses one scalar from the full token; rejects trailing garbage.
double parse_double_text(std::string_view text, const std::string& what);
long long parse_i64_text(std::string_view text, const std::string& what);
std::uint64_t parse_u64_text(std::string_view text, const std::string& what);

} // namespace agekit
