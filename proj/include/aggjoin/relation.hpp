#pragma once

#include <span>
#include <string>
#include <vector>

#include "aggjoin/value.hpp"

namespace aggjoin {

struct SchemaColumn {
    std::string name;
    AttributeType type;
};

using Schema = std::vector<SchemaColumn>;

/// A named bag of typed tuples, stored row-major in one flat vector.
/// Immutable after load; safe to read concurrently.
class Relation {
public:
    Relation() = default;
    Relation(std::string name, Schema schema)
        : name_(std::move(name)), schema_(std::move(schema)) {}

    const std::string& name() const { return name_; }
    const Schema& schema() const { return schema_; }
    size_t arity() const { return schema_.size(); }
    size_t cardinality() const { return arity() == 0 ? 0 : data_.size() / arity(); }

    std::span<const Value> row(size_t i) const {
        return std::span<const Value>(data_.data() + i * arity(), arity());
    }
    const Value& at(size_t row, size_t col) const { return data_[row * arity() + col]; }

    void append_row(std::span<const Value> values) {
        data_.insert(data_.end(), values.begin(), values.end());
    }

    int column_index(const std::string& attr) const {
        for (size_t i = 0; i < schema_.size(); ++i) {
            if (schema_[i].name == attr) return static_cast<int>(i);
        }
        return -1;
    }

    bool operator==(const Relation& other) const {
        if (name_ != other.name_ || schema_.size() != other.schema_.size()) return false;
        for (size_t i = 0; i < schema_.size(); ++i) {
            if (schema_[i].name != other.schema_[i].name ||
                schema_[i].type != other.schema_[i].type) {
                return false;
            }
        }
        if (cardinality() != other.cardinality()) return false;
        for (size_t i = 0; i < data_.size(); ++i) {
            if (!data_[i].same_as(other.data_[i])) return false;
        }
        return true;
    }

private:
    std::string name_;
    Schema schema_;
    std::vector<Value> data_;
};

} // namespace aggjoin
