#include "aggjoin/value.hpp"

#include <cmath>
#include <charconv>
#include <mutex>
#include <unordered_map>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

// Process-wide text dictionary. Reads vastly outnumber writes; a plain mutex
// is fine at desk scale (loading is single-threaded per file anyway).
class StringPool {
public:
    static StringPool& instance() {
        static StringPool pool;
        return pool;
    }

    uint32_t intern(std::string_view text) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = ids_.find(std::string(text));
        if (it != ids_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(strings_.size());
        strings_.emplace_back(text);
        ids_.emplace(strings_.back(), id);
        return id;
    }

    std::string_view view(uint32_t id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return strings_[id];
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> strings_;
    std::unordered_map<std::string, uint32_t> ids_;
};

} // namespace

const char* to_string(AttributeType type) {
    switch (type) {
        case AttributeType::Int64: return "int64";
        case AttributeType::Float64: return "float64";
        case AttributeType::Text: return "text";
        case AttributeType::Bool: return "bool";
    }
    return "?";
}

AttributeType attribute_type_from_string(std::string_view text) {
    if (text == "int64" || text == "int" || text == "long") return AttributeType::Int64;
    if (text == "float64" || text == "float" || text == "double") return AttributeType::Float64;
    if (text == "text" || text == "string") return AttributeType::Text;
    if (text == "bool" || text == "boolean") return AttributeType::Bool;
    raise(ErrorKind::Ingest, "unknown attribute type '" + std::string(text) + "'");
}

Value Value::from_text(std::string_view v) {
    Value x;
    x.tag_ = Tag::Text;
    x.text_id_ = StringPool::instance().intern(v);
    return x;
}

std::string_view Value::as_text() const {
    return StringPool::instance().view(text_id_);
}

bool Value::same_as(const Value& other) const {
    if (tag_ != other.tag_) {
        // Int/Float cross-type equality for merged join classes is excluded
        // at resolve time; treat differing tags as unequal (NULL included).
        if ((tag_ == Tag::Int && other.tag_ == Tag::Float) ||
            (tag_ == Tag::Float && other.tag_ == Tag::Int)) {
            return numeric() == other.numeric();
        }
        return false;
    }
    switch (tag_) {
        case Tag::Null: return true;
        case Tag::Int: return int_ == other.int_;
        case Tag::Float: return float_ == other.float_;
        case Tag::Bool: return bool_ == other.bool_;
        case Tag::Text: return text_id_ == other.text_id_;
    }
    return false;
}

int Value::compare(const Value& other) const {
    // NULL last.
    if (is_null() && other.is_null()) return 0;
    if (is_null()) return 1;
    if (other.is_null()) return -1;
    bool num_a = tag_ == Tag::Int || tag_ == Tag::Float;
    bool num_b = other.tag_ == Tag::Int || other.tag_ == Tag::Float;
    if (num_a && num_b) {
        if (tag_ == Tag::Int && other.tag_ == Tag::Int) {
            return int_ < other.int_ ? -1 : (int_ > other.int_ ? 1 : 0);
        }
        double a = numeric(), b = other.numeric();
        return a < b ? -1 : (a > b ? 1 : 0);
    }
    if (tag_ != other.tag_) {
        raise(ErrorKind::Internal, "comparison across incompatible value types");
    }
    if (tag_ == Tag::Bool) {
        return bool_ == other.bool_ ? 0 : (bool_ ? 1 : -1);
    }
    // Text: dictionary ids are not ordered; compare the strings.
    auto a = as_text(), b = other.as_text();
    return a < b ? -1 : (a > b ? 1 : 0);
}

size_t Value::hash() const {
    switch (tag_) {
        case Tag::Null: return 0x6e756c6cull;
        case Tag::Int: return std::hash<int64_t>()(int_);
        case Tag::Float: {
            // Hash integral floats like ints so Int/Float classes agree.
            double f = float_;
            if (f == static_cast<double>(static_cast<int64_t>(f))) {
                return std::hash<int64_t>()(static_cast<int64_t>(f));
            }
            return std::hash<double>()(f);
        }
        case Tag::Bool: return bool_ ? 0x74727565ull : 0x66616c73ull;
        case Tag::Text: return std::hash<uint32_t>()(text_id_) * 0x9e3779b1ull;
    }
    return 0;
}

std::string Value::to_display_string() const {
    switch (tag_) {
        case Tag::Null: return "";
        case Tag::Int: return std::to_string(int_);
        case Tag::Float: {
            char buf[32];
            auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), float_);
            return std::string(buf, end);
        }
        case Tag::Bool: return bool_ ? "true" : "false";
        case Tag::Text: return std::string(as_text());
    }
    return "";
}

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Io: return "io";
        case ErrorKind::Ingest: return "ingest";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::NotSupported: return "not-supported";
        case ErrorKind::Resolve: return "resolve";
        case ErrorKind::Constraint: return "constraint";
        case ErrorKind::Cyclic: return "cyclic";
        case ErrorKind::NotApplicable: return "not-applicable";
        case ErrorKind::Plan: return "plan";
        case ErrorKind::Eval: return "eval";
        case ErrorKind::Overflow: return "overflow";
        case ErrorKind::Budget: return "budget-exceeded";
        case ErrorKind::OracleMismatch: return "oracle-mismatch";
        case ErrorKind::Internal: return "internal";
    }
    return "?";
}

} // namespace aggjoin
