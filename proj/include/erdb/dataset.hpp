#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "erdb/er_model.hpp"
#include "erdb/value.hpp"

namespace erdb {

/// One relationship instance: key tuples aligned with the relationship's
/// participant order, plus a (possibly empty) composite of descriptive
/// attribute values.
struct RelationshipInstance {
    std::vector<std::vector<Value>> role_keys;
    Value descriptive = Value{Value::Composite{}};
};

/// A logical dataset: entity instances grouped by their concrete class
/// (a Student document lives under "Student", never under "Person"), plus
/// relationship instances. Documents are composite Values whose fields are
/// attribute names; weak-entity documents also carry their owner key-closure
/// columns. This is the reference representation every mapping must be able
/// to materialize and reconstruct.
struct Dataset {
    std::map<std::string, std::vector<Value>> entities;
    std::map<std::string, std::vector<RelationshipInstance>> relationships;

    bool empty() const;
    size_t instance_count() const;
};

/// Validates and normalizes one entity document: unknown fields rejected,
/// required key (closure) fields enforced, scalars coerced (int→float,
/// date shape checked), multi-valued arrays sorted and deduplicated (set
/// semantics), missing multi-valued attributes normalized to empty arrays,
/// absent-valued fields dropped. Returns the normalized document.
Value conform_entity_document(const ErSchema& schema, const std::string& entity, const Value& doc);

/// Same for a relationship instance (arity, key tuple types, descriptive doc).
RelationshipInstance conform_relationship_instance(const ErSchema& schema,
                                                   const std::string& relationship,
                                                   const RelationshipInstance& inst);

/// Key tuple of a conformed document, in key-closure order.
std::vector<Value> document_key(const ErSchema& schema, const std::string& entity,
                                const Value& doc);

/// Validates a whole dataset against a schema and returns the normalized
/// form: documents conformed, instance lists sorted by key, duplicate keys /
/// dangling references / cardinality violations / explicit identifying-
/// relationship instances rejected via Error.
Dataset conform_dataset(const ErSchema& schema, const Dataset& dataset);

/// Canonical text of a conformed dataset (sorted, deterministic) and its
/// fingerprint. Two datasets are equal iff their canonical texts are.
std::string dataset_canonical_text(const Dataset& dataset);
std::string dataset_fingerprint(const Dataset& dataset);

/// Line-delimited interchange format: one JSON object per line,
/// {"kind":"entity","type":NAME,"doc":{…}} or
/// {"kind":"relationship","type":NAME,"roles":[[…],…],"attrs":{…}}.
std::string dataset_to_jsonl(const Dataset& dataset);
Dataset dataset_from_jsonl(const std::string& text, const ErSchema& schema);

/// Deterministic synthetic data. `scale` is the approximate total number of
/// strong-entity instances, distributed by class weight; weak entities and
/// relationships scale with their owners/participants.
struct DatasetGenSpec {
    uint64_t seed = 1;
    size_t scale = 100;
    std::map<std::string, double> class_weights;  // concrete class → weight (default 1)
    std::map<std::string, double> weak_per_owner; // weak entity → mean dependents (default 1)
    std::map<std::string, double> rel_fanout;     // relationship → mean links per instance (default 0.5)
    size_t mv_max_len = 4;                        // multi-valued lengths drawn from 0..mv_max_len
};

Dataset generate_dataset(const ErSchema& schema, const DatasetGenSpec& spec);

} // namespace erdb
