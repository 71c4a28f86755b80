#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace aggjoin {

enum class AttributeType { Int64, Float64, Text, Bool };

const char* to_string(AttributeType type);
AttributeType attribute_type_from_string(std::string_view text);

/// A single nullable cell. Text values are dictionary-encoded through a
/// process-wide pool so that a Value stays 16 bytes and rows are trivially
/// copyable; relations are immutable after load, so interning is write-once.
class Value {
public:
    enum class Tag : uint8_t { Null, Int, Float, Text, Bool };

    Value() : tag_(Tag::Null), int_(0) {}

    static Value null() { return Value(); }
    static Value from_int(int64_t v) {
        Value x;
        x.tag_ = Tag::Int;
        x.int_ = v;
        return x;
    }
    static Value from_float(double v) {
        Value x;
        x.tag_ = Tag::Float;
        x.float_ = v;
        return x;
    }
    static Value from_bool(bool v) {
        Value x;
        x.tag_ = Tag::Bool;
        x.bool_ = v;
        return x;
    }
    static Value from_text(std::string_view v);

    Tag tag() const { return tag_; }
    bool is_null() const { return tag_ == Tag::Null; }
    int64_t as_int() const { return int_; }
    double as_float() const { return float_; }
    bool as_bool() const { return bool_; }
    std::string_view as_text() const;

    /// Numeric view: Int and Float promote to double; anything else is a
    /// caller bug guarded by type checks at resolve time.
    double numeric() const { return tag_ == Tag::Int ? static_cast<double>(int_) : float_; }

    /// Grouping equality: NULL == NULL. Join code must skip NULL keys itself.
    bool same_as(const Value& other) const;

    /// Three-way ordering within a type class (numeric cross-compares Int and
    /// Float). NULL sorts last. Used by merge-join sorting and output sorting.
    int compare(const Value& other) const;

    size_t hash() const;

    std::string to_display_string() const;

private:
    Tag tag_;
    union {
        int64_t int_;
        double float_;
        bool bool_;
        uint32_t text_id_;
    };
};

static_assert(sizeof(Value) == 16, "Value layout regression");

using Row = std::vector<Value>;

struct RowHash {
    size_t operator()(const Row& row) const {
        size_t h = 0x9e3779b97f4a7c15ull;
        for (const auto& v : row) {
            h ^= v.hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

struct RowEq {
    bool operator()(const Row& a, const Row& b) const {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i) {
            if (!a[i].same_as(b[i])) return false;
        }
        return true;
    }
};

} // namespace aggjoin
