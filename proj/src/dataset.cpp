#include "erdb/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "erdb/json_util.hpp"

namespace erdb {

bool Dataset::empty() const { return instance_count() == 0; }

size_t Dataset::instance_count() const {
    size_t n = 0;
    for (const auto& [name, docs] : entities) n += docs.size();
    for (const auto& [name, insts] : relationships) n += insts.size();
    return n;
}

// ---- JSON conversion ----

ordered_json value_to_json(const Value& v) {
    if (v.is_absent()) return nullptr;
    if (v.is_bool()) return v.as_bool();
    if (v.is_int()) return v.as_int();
    if (v.is_float()) return v.as_float();
    if (v.is_string()) return v.as_string();
    if (v.is_array()) {
        ordered_json arr = ordered_json::array();
        for (const auto& e : v.as_array()) arr.push_back(value_to_json(e));
        return arr;
    }
    ordered_json obj = ordered_json::object();
    for (const auto& [k, field] : v.as_composite()) obj[k] = value_to_json(field);
    return obj;
}

Value json_to_value(const ordered_json& j) {
    switch (j.type()) {
    case ordered_json::value_t::null: return Value{};
    case ordered_json::value_t::boolean: return Value{j.get<bool>()};
    case ordered_json::value_t::number_integer:
    case ordered_json::value_t::number_unsigned: return Value{j.get<int64_t>()};
    case ordered_json::value_t::number_float: return Value{j.get<double>()};
    case ordered_json::value_t::string: return Value{j.get<std::string>()};
    case ordered_json::value_t::array: {
        Value::Array arr;
        for (const auto& e : j) arr.push_back(json_to_value(e));
        return Value{std::move(arr)};
    }
    case ordered_json::value_t::object: {
        Value::Composite obj;
        for (const auto& [k, e] : j.items()) obj[k] = json_to_value(e);
        return Value{std::move(obj)};
    }
    default: throw Error("unsupported JSON value");
    }
}

// ---- document conformance ----

namespace {

Value coerce_scalar(const Value& v, ScalarType t, const std::string& context) {
    switch (t) {
    case ScalarType::Int:
    case ScalarType::BigInt:
        if (v.is_int()) return v;
        break;
    case ScalarType::Float:
        if (v.is_float()) return v;
        if (v.is_int()) return Value{static_cast<double>(v.as_int())};
        break;
    case ScalarType::Text:
        if (v.is_string()) return v;
        break;
    case ScalarType::Bool:
        if (v.is_bool()) return v;
        break;
    case ScalarType::Date:
        if (v.is_string()) {
            if (!looks_like_date(v.as_string()))
                throw Error(context + ": '" + v.as_string() + "' is not a YYYY-MM-DD date");
            return v;
        }
        break;
    }
    throw Error(context + ": expected " + scalar_type_name(t) + ", got " + v.canonical());
}

Value conform_attribute(const Value& v, const AttributeDef& attr, const std::string& context);

/// Conforms a composite literal against a child list: unknown fields
/// rejected, absent fields dropped, missing multi-valued children added
/// as empty arrays.
Value conform_children(const Value& v, const std::vector<AttributeDef>& children,
                       const std::string& context) {
    if (!v.is_composite()) throw Error(context + ": expected {field: value, …}");
    std::set<std::string> known;
    for (const auto& c : children) known.insert(c.name);
    for (const auto& [k, field] : v.as_composite())
        if (!known.count(k)) throw Error(context + ": unknown field '" + k + "'");
    Value::Composite out;
    for (const auto& c : children) {
        auto it = v.as_composite().find(c.name);
        if (it == v.as_composite().end() || it->second.is_absent()) {
            if (c.is_multi()) out[c.name] = Value{Value::Array{}};
            continue;
        }
        out[c.name] = conform_attribute(it->second, c, context + "." + c.name);
    }
    return Value{std::move(out)};
}

Value conform_attribute(const Value& v, const AttributeDef& attr, const std::string& context) {
    switch (attr.kind) {
    case AttributeDef::Kind::Scalar:
        return coerce_scalar(v, attr.scalar, context);
    case AttributeDef::Kind::Composite:
        return conform_children(v, attr.children, context);
    case AttributeDef::Kind::MultiValued: {
        if (!v.is_array()) throw Error(context + ": expected an array");
        Value::Array out;
        for (const auto& e : v.as_array())
            out.push_back(conform_attribute(e, attr.element_def(), context + "[]"));
        // set semantics: sorted, duplicate-free
        std::sort(out.begin(), out.end(),
                  [](const Value& a, const Value& b) { return a.compare(b) < 0; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const Value& a, const Value& b) { return a.compare(b) == 0; }),
                  out.end());
        return Value{std::move(out)};
    }
    }
    throw Error("unreachable");
}

ScalarType closure_attr_type(const ErSchema& schema, const KeyPart& part) {
    const AttributeDef* a = schema.entity(part.entity).find_attribute(part.attribute);
    if (!a) throw Error("internal: key closure names a missing attribute");
    return a->scalar;
}

} // namespace

Value conform_entity_document(const ErSchema& schema, const std::string& entity,
                              const Value& doc) {
    if (!doc.is_composite())
        throw Error(entity + " document must be {field: value, …}");
    std::set<std::string> chain_entities;
    for (const auto& cls : schema.chain_of(entity)) chain_entities.insert(cls);

    // slots: owner key-closure columns (weak entities) + chain attributes
    std::map<std::string, const AttributeDef*> attrs;
    std::map<std::string, ScalarType> closure_fields;
    for (const auto& part : key_closure(schema, entity)) {
        if (chain_entities.count(part.entity)) continue;
        if (!closure_fields.emplace(part.attribute, closure_attr_type(schema, part)).second)
            throw Error("ambiguous key column '" + part.attribute + "' in owner closure of '" +
                        entity + "'");
    }
    for (const auto& cls : schema.chain_of(entity))
        for (const auto& a : schema.entity(cls).attributes) {
            if (closure_fields.count(a.name))
                throw Error("attribute '" + a.name + "' collides with an owner key column of '" +
                            entity + "'");
            attrs[a.name] = &a;
        }

    for (const auto& [k, v] : doc.as_composite())
        if (!attrs.count(k) && !closure_fields.count(k))
            throw Error("entity set '" + entity + "' has no attribute '" + k + "'");

    Value::Composite out;
    for (const auto& [name, t] : closure_fields) {
        auto it = doc.as_composite().find(name);
        if (it == doc.as_composite().end() || it->second.is_absent())
            throw Error("'" + entity + "' document is missing key column '" + name + "'");
        out[name] = coerce_scalar(it->second, t, entity + "." + name);
    }
    for (const auto& [name, attr] : attrs) {
        auto it = doc.as_composite().find(name);
        if (it == doc.as_composite().end() || it->second.is_absent()) {
            if (attr->is_key)
                throw Error("'" + entity + "' document is missing key attribute '" + name + "'");
            if (attr->is_multi()) out[name] = Value{Value::Array{}};
            continue;
        }
        out[name] = conform_attribute(it->second, *attr, entity + "." + name);
    }
    return Value{std::move(out)};
}

RelationshipInstance conform_relationship_instance(const ErSchema& schema,
                                                   const std::string& relationship,
                                                   const RelationshipInstance& inst) {
    const RelationshipDef& rel = schema.relationship(relationship);
    if (inst.role_keys.size() != rel.participants.size())
        throw Error("relationship '" + relationship + "' instance needs " +
                    std::to_string(rel.participants.size()) + " key tuples");
    RelationshipInstance out;
    for (size_t i = 0; i < rel.participants.size(); ++i) {
        const auto& p = rel.participants[i];
        auto closure = key_closure(schema, p.entity);
        if (inst.role_keys[i].size() != closure.size())
            throw Error("role '" + p.role + "' key needs " + std::to_string(closure.size()) +
                        " value(s)");
        std::vector<Value> key;
        for (size_t k = 0; k < closure.size(); ++k)
            key.push_back(coerce_scalar(inst.role_keys[i][k], closure_attr_type(schema, closure[k]),
                                        relationship + "." + p.role + "[" + std::to_string(k) +
                                            "]"));
        out.role_keys.push_back(std::move(key));
    }
    Value desc = inst.descriptive.is_absent() ? Value{Value::Composite{}} : inst.descriptive;
    out.descriptive = conform_children(desc, rel.attributes, relationship);
    return out;
}

std::vector<Value> document_key(const ErSchema& schema, const std::string& entity,
                                const Value& doc) {
    std::vector<Value> key;
    for (const auto& part : key_closure(schema, entity)) {
        auto it = doc.as_composite().find(part.attribute);
        if (it == doc.as_composite().end())
            throw Error("document is missing key column '" + part.attribute + "'");
        key.push_back(it->second);
    }
    return key;
}

namespace {

int compare_tuples(const std::vector<Value>& a, const std::vector<Value>& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        int c = a[i].compare(b[i]);
        if (c != 0) return c;
    }
    return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

struct TupleLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
        return compare_tuples(a, b) < 0;
    }
};

/// key tuple → concrete class, per hierarchy family
using FamilyIndex = std::map<std::string, std::map<std::vector<Value>, std::string, TupleLess>>;

/// Looks up a key tuple in its family; returns the concrete class or nullptr.
const std::string* family_lookup(const FamilyIndex& families, const std::string& family,
                                 const std::vector<Value>& key) {
    auto fam = families.find(family);
    if (fam == families.end()) return nullptr;
    auto hit = fam->second.find(key);
    return hit == fam->second.end() ? nullptr : &hit->second;
}

std::string tuple_text(const std::vector<Value>& key) {
    std::string out = "(";
    for (size_t i = 0; i < key.size(); ++i) {
        if (i) out += ",";
        key[i].canonical_into(out);
    }
    out += ")";
    return out;
}

} // namespace

Dataset conform_dataset(const ErSchema& schema, const Dataset& dataset) {
    Dataset out;

    // identifying relationships are implicit in weak-entity documents
    std::set<std::string> identifying;
    for (const auto& [name, e] : schema.entities)
        if (e.weak_owner) identifying.insert(e.weak_owner->identifying_relationship);

    // conform entities; track key → concrete class per hierarchy family
    FamilyIndex families;
    for (const auto& [name, docs] : dataset.entities) {
        const std::string family = schema.root_of(name).name;
        auto& fam = families[family];
        auto& list = out.entities[name];
        for (const auto& doc : docs) {
            Value conformed = conform_entity_document(schema, name, doc);
            auto key = document_key(schema, name, conformed);
            if (!fam.emplace(key, name).second)
                throw Error("duplicate key " + tuple_text(key) + " in hierarchy of '" + family +
                            "'");
            list.push_back(std::move(conformed));
        }
    }

    // weak owners must exist
    for (const auto& [name, docs] : out.entities) {
        const EntitySetDef& e = schema.entity(name);
        if (!e.weak_owner) continue;
        const std::string owner_family = schema.root_of(e.weak_owner->owner).name;
        size_t owner_arity = key_closure(schema, e.weak_owner->owner).size();
        for (const auto& doc : docs) {
            auto key = document_key(schema, name, doc);
            std::vector<Value> owner_key(key.begin(), key.begin() + owner_arity);
            const std::string* owner_cls = family_lookup(families, owner_family, owner_key);
            if (!owner_cls)
                throw Error("'" + name + "' instance " + tuple_text(key) +
                            " references a missing owner " + tuple_text(owner_key));
            if (!schema.is_subclass_of(*owner_cls, e.weak_owner->owner))
                throw Error("'" + name + "' owner " + tuple_text(owner_key) + " is a '" +
                            *owner_cls + "', not a '" + e.weak_owner->owner + "'");
        }
    }

    // conform relationships, check references and cardinalities
    for (const auto& [name, insts] : dataset.relationships) {
        const RelationshipDef& rel = schema.relationship(name);
        if (identifying.count(name))
            throw Error("relationship '" + name +
                        "' is identifying; its instances are implicit in weak-entity documents");
        auto& list = out.relationships[name];
        std::set<std::string> seen_pairs;
        std::vector<std::set<std::string>> seen_per_role(rel.participants.size());
        for (const auto& inst : insts) {
            RelationshipInstance conformed = conform_relationship_instance(schema, name, inst);
            std::string pair_text;
            for (size_t i = 0; i < rel.participants.size(); ++i) {
                const auto& p = rel.participants[i];
                const auto& key = conformed.role_keys[i];
                const std::string* cls =
                    family_lookup(families, schema.root_of(p.entity).name, key);
                if (!cls)
                    throw Error("'" + name + "' references missing " + p.role + " instance " +
                                tuple_text(key));
                if (!schema.is_subclass_of(*cls, p.entity))
                    throw Error("'" + name + "' " + p.role + " " + tuple_text(key) + " is a '" +
                                *cls + "', not a '" + p.entity + "'");
                pair_text += tuple_text(key) + "|";
            }
            if (!seen_pairs.insert(pair_text).second)
                throw Error("duplicate '" + name + "' instance " + pair_text);
            // if some role has cardinality one, every other role's key is unique
            for (size_t i = 0; i < rel.participants.size(); ++i) {
                bool other_one = false;
                for (size_t j = 0; j < rel.participants.size(); ++j)
                    if (j != i && rel.participants[j].cardinality == Cardinality::One)
                        other_one = true;
                if (!other_one) continue;
                if (!seen_per_role[i].insert(tuple_text(conformed.role_keys[i])).second)
                    throw Error("'" + name + "' " + rel.participants[i].role + " " +
                                tuple_text(conformed.role_keys[i]) +
                                " linked more than once (cardinality one)");
            }
            list.push_back(std::move(conformed));
        }
    }

    // canonical order
    for (auto& [name, docs] : out.entities)
        std::sort(docs.begin(), docs.end(),
                  [&](const Value& a, const Value& b) { return a.compare(b) < 0; });
    for (auto& [name, insts] : out.relationships)
        std::sort(insts.begin(), insts.end(),
                  [](const RelationshipInstance& a, const RelationshipInstance& b) {
                      for (size_t i = 0; i < std::min(a.role_keys.size(), b.role_keys.size());
                           ++i) {
                          int k = compare_tuples(a.role_keys[i], b.role_keys[i]);
                          if (k != 0) return k < 0;
                      }
                      return a.descriptive.compare(b.descriptive) < 0;
                  });
    return out;
}

std::string dataset_canonical_text(const Dataset& dataset) {
    std::string out;
    for (const auto& [name, docs] : dataset.entities) {
        for (const auto& doc : docs) {
            out += "entity ";
            out += name;
            out += ' ';
            doc.canonical_into(out);
            out += '\n';
        }
    }
    for (const auto& [name, insts] : dataset.relationships) {
        for (const auto& inst : insts) {
            out += "rel ";
            out += name;
            out += ' ';
            for (const auto& key : inst.role_keys) out += tuple_text(key);
            out += ' ';
            inst.descriptive.canonical_into(out);
            out += '\n';
        }
    }
    return out;
}

std::string dataset_fingerprint(const Dataset& dataset) {
    return fnv1a64_hex(dataset_canonical_text(dataset));
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::string out;
    for (const auto& [name, docs] : dataset.entities) {
        for (const auto& doc : docs) {
            ordered_json line;
            line["kind"] = "entity";
            line["type"] = name;
            line["doc"] = value_to_json(doc);
            out += line.dump();
            out += '\n';
        }
    }
    for (const auto& [name, insts] : dataset.relationships) {
        for (const auto& inst : insts) {
            ordered_json line;
            line["kind"] = "relationship";
            line["type"] = name;
            ordered_json roles = ordered_json::array();
            for (const auto& key : inst.role_keys) {
                ordered_json tuple = ordered_json::array();
                for (const auto& v : key) tuple.push_back(value_to_json(v));
                roles.push_back(tuple);
            }
            line["roles"] = roles;
            line["attrs"] = value_to_json(inst.descriptive);
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

Dataset dataset_from_jsonl(const std::string& text, const ErSchema& schema) {
    Dataset out;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw Error("line " + std::to_string(lineno) + ": " + e.what());
        }
        std::string kind = j.value("kind", "");
        std::string type = j.value("type", "");
        if (kind == "entity") {
            if (!j.contains("doc"))
                throw Error("line " + std::to_string(lineno) + ": entity record needs 'doc'");
            out.entities[type].push_back(json_to_value(j["doc"]));
        } else if (kind == "relationship") {
            if (!j.contains("roles"))
                throw Error("line " + std::to_string(lineno) +
                            ": relationship record needs 'roles'");
            RelationshipInstance inst;
            for (const auto& tuple : j["roles"]) {
                std::vector<Value> key;
                for (const auto& v : tuple) key.push_back(json_to_value(v));
                inst.role_keys.push_back(std::move(key));
            }
            if (j.contains("attrs")) inst.descriptive = json_to_value(j["attrs"]);
            out.relationships[type].push_back(std::move(inst));
        } else {
            throw Error("line " + std::to_string(lineno) + ": unknown record kind '" + kind + "'");
        }
    }
    return conform_dataset(schema, out);
}

// ---- synthetic generation ----

namespace {

/// Deterministic RNG: raw 64-bit outputs reduced by modulo, so sequences are
/// identical across platforms (std::uniform_int_distribution is not).
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(uint64_t seed) : eng(seed) {}
    uint64_t next(uint64_t bound) { return bound ? eng() % bound : 0; }
    bool chance(double p) {
        if (p <= 0) return false;
        if (p >= 1) return true;
        return (eng() >> 11) * (1.0 / 9007199254740992.0) < p;
    }
};

Value random_scalar(ScalarType t, Rng& rng) {
    switch (t) {
    case ScalarType::Int: return Value{static_cast<int64_t>(rng.next(1000))};
    case ScalarType::BigInt: return Value{static_cast<int64_t>(rng.next(100000))};
    case ScalarType::Float: return Value{static_cast<double>(rng.next(10000)) / 100.0};
    case ScalarType::Text: return Value{"c" + std::to_string(rng.next(8))};
    case ScalarType::Bool: return Value{rng.next(2) == 1};
    case ScalarType::Date: {
        int y = 2000 + static_cast<int>(rng.next(25));
        int m = 1 + static_cast<int>(rng.next(12));
        int d = 1 + static_cast<int>(rng.next(28));
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
        return Value{std::string(buf)};
    }
    }
    return Value{};
}

/// Key attribute values: the first key attribute carries the unique counter;
/// the rest derive from small pools (binary-unique via the first).
Value key_scalar(ScalarType t, int64_t counter, size_t index, Rng& rng) {
    if (index == 0) {
        if (t == ScalarType::Text) return Value{"k" + std::to_string(counter)};
        if (t == ScalarType::Date) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", 2000 + int(counter % 30),
                          1 + int(counter % 12), 1 + int(counter % 28));
            return Value{std::string(buf)};
        }
        return Value{counter};
    }
    switch (t) {
    case ScalarType::Text: {
        static const char* pool[] = {"Fall", "Spring", "Summer", "Winter"};
        return Value{std::string(pool[rng.next(4)])};
    }
    case ScalarType::Int:
    case ScalarType::BigInt: return Value{static_cast<int64_t>(2000 + rng.next(30))};
    default: return random_scalar(t, rng);
    }
}

Value random_attribute(const AttributeDef& attr, size_t mv_max_len, Rng& rng);

Value random_children(const std::vector<AttributeDef>& children, size_t mv_max_len, Rng& rng) {
    Value::Composite out;
    for (const auto& c : children) {
        if (c.is_scalar() && rng.next(8) == 0) continue; // occasional absence
        if (c.is_composite() && rng.next(8) == 0) continue;
        out[c.name] = random_attribute(c, mv_max_len, rng);
    }
    return Value{std::move(out)};
}

Value random_attribute(const AttributeDef& attr, size_t mv_max_len, Rng& rng) {
    switch (attr.kind) {
    case AttributeDef::Kind::Scalar:
        return random_scalar(attr.scalar, rng);
    case AttributeDef::Kind::Composite:
        return random_children(attr.children, mv_max_len, rng);
    case AttributeDef::Kind::MultiValued: {
        Value::Array arr;
        size_t len = rng.next(mv_max_len + 1);
        for (size_t i = 0; i < len; ++i)
            arr.push_back(random_attribute(attr.element_def(), mv_max_len, rng));
        return Value{std::move(arr)};
    }
    }
    return Value{};
}

} // namespace

Dataset generate_dataset(const ErSchema& schema, const DatasetGenSpec& spec) {
    Rng rng(spec.seed);
    Dataset out;

    auto weight_of = [&](const std::string& cls) {
        auto it = spec.class_weights.find(cls);
        return it == spec.class_weights.end() ? 1.0 : it->second;
    };

    // ---- strong entities (including subclasses), weights over concrete classes
    std::vector<std::string> strong;
    double total_weight = 0;
    for (const auto& [name, e] : schema.entities) {
        if (e.is_weak()) continue;
        if (weight_of(name) <= 0) continue;
        strong.push_back(name);
        total_weight += weight_of(name);
    }

    std::map<std::string, int64_t> family_counter; // root → next key
    // instance index: family root → list of (concrete class, key tuple)
    std::map<std::string, std::vector<std::pair<std::string, std::vector<Value>>>> members;

    for (const auto& cls : strong) {
        size_t count = total_weight > 0
                           ? static_cast<size_t>(weight_of(cls) / total_weight *
                                                     static_cast<double>(spec.scale) +
                                                 0.5)
                           : 0;
        if (spec.scale > 0 && count == 0) count = 1;
        const std::string family = schema.root_of(cls).name;
        for (size_t i = 0; i < count; ++i) {
            int64_t counter = ++family_counter[family];
            Value::Composite doc;
            size_t key_index = 0;
            for (const auto& link : schema.chain_of(cls)) {
                for (const auto& a : schema.entity(link).attributes) {
                    if (a.is_key) {
                        doc[a.name] = key_scalar(a.scalar, counter, key_index++, rng);
                    } else {
                        if (a.is_scalar() && rng.next(8) == 0) continue;
                        if (a.is_composite() && rng.next(8) == 0) continue;
                        doc[a.name] = random_attribute(a, spec.mv_max_len, rng);
                    }
                }
            }
            Value conformed = conform_entity_document(schema, cls, Value{std::move(doc)});
            members[family].emplace_back(cls, document_key(schema, cls, conformed));
            out.entities[cls].push_back(std::move(conformed));
        }
    }

    // ---- weak entities, owners first (ownership chains allowed)
    std::vector<std::string> weak_pending;
    for (const auto& [name, e] : schema.entities)
        if (e.is_weak()) weak_pending.push_back(name);
    bool progress = true;
    while (!weak_pending.empty() && progress) {
        progress = false;
        for (auto it = weak_pending.begin(); it != weak_pending.end();) {
            const EntitySetDef& e = schema.entity(*it);
            const std::string owner_family = schema.root_of(e.weak_owner->owner).name;
            bool owner_is_weak = schema.entity(e.weak_owner->owner).is_weak();
            bool owner_ready = !owner_is_weak ||
                               std::find(weak_pending.begin(), weak_pending.end(),
                                         e.weak_owner->owner) == weak_pending.end();
            if (!owner_ready) {
                ++it;
                continue;
            }
            double mean = 1.0;
            if (auto m = spec.weak_per_owner.find(*it); m != spec.weak_per_owner.end())
                mean = m->second;
            auto owners = members[owner_family]; // copy: may grow for weak-of-weak
            for (const auto& [owner_cls, owner_key] : owners) {
                if (!schema.is_subclass_of(owner_cls, e.weak_owner->owner)) continue;
                size_t n = static_cast<size_t>(mean);
                if (rng.chance(mean - static_cast<double>(n))) ++n;
                for (size_t k = 1; k <= n; ++k) {
                    Value::Composite doc;
                    auto closure = key_closure(schema, *it);
                    for (size_t c = 0; c < owner_key.size(); ++c)
                        doc[closure[c].attribute] = owner_key[c];
                    size_t key_index = 0;
                    for (const auto& a : e.attributes) {
                        if (a.is_key) {
                            doc[a.name] = key_scalar(a.scalar, static_cast<int64_t>(k),
                                                     key_index++, rng);
                        } else {
                            if (a.is_scalar() && rng.next(8) == 0) continue;
                            doc[a.name] = random_attribute(a, spec.mv_max_len, rng);
                        }
                    }
                    Value conformed = conform_entity_document(schema, *it, Value{std::move(doc)});
                    members[schema.root_of(*it).name].emplace_back(
                        *it, document_key(schema, *it, conformed));
                    out.entities[*it].push_back(std::move(conformed));
                }
            }
            it = weak_pending.erase(it);
            progress = true;
        }
    }

    // ---- relationships (identifying ones are implicit)
    std::set<std::string> identifying;
    for (const auto& [name, e] : schema.entities)
        if (e.weak_owner) identifying.insert(e.weak_owner->identifying_relationship);

    for (const auto& [name, rel] : schema.relationships) {
        if (identifying.count(name)) continue;
        if (!rel.is_binary()) continue;
        double fanout = 0.5;
        if (auto f = spec.rel_fanout.find(name); f != spec.rel_fanout.end()) fanout = f->second;

        // candidate pools per role: instances of the participant's subtree
        std::vector<std::vector<const std::pair<std::string, std::vector<Value>>*>> pools(2);
        for (size_t i = 0; i < 2; ++i) {
            const auto& p = rel.participants[i];
            for (const auto& m : members[schema.root_of(p.entity).name])
                if (schema.is_subclass_of(m.first, p.entity)) pools[i].push_back(&m);
        }
        if (pools[0].empty() || pools[1].empty()) continue;

        auto make_desc = [&]() {
            return rel.attributes.empty() ? Value{Value::Composite{}}
                                          : random_children(rel.attributes, spec.mv_max_len, rng);
        };

        auto& list = out.relationships[name];
        int one_side = -1;
        for (size_t i = 0; i < 2; ++i)
            if (rel.participants[i].cardinality == Cardinality::One) one_side = static_cast<int>(i);

        if (one_side >= 0) {
            // iterate the constrained side, link with probability fanout
            size_t many = one_side == 0 ? 1 : 0;
            std::set<std::string> used_one; // for one-one
            bool both_one = rel.participants[many].cardinality == Cardinality::One;
            for (const auto* m : pools[many]) {
                if (!rng.chance(std::min(fanout, 1.0))) continue;
                const auto* o = pools[one_side][rng.next(pools[one_side].size())];
                if (both_one && !used_one.insert(tuple_text(o->second)).second) continue;
                RelationshipInstance inst;
                inst.role_keys.resize(2);
                inst.role_keys[many] = m->second;
                inst.role_keys[one_side] = o->second;
                inst.descriptive = make_desc();
                list.push_back(std::move(inst));
            }
        } else {
            size_t target = static_cast<size_t>(
                fanout * static_cast<double>(std::max(pools[0].size(), pools[1].size())) + 0.5);
            std::set<std::string> seen;
            size_t attempts = 0;
            while (list.size() < target && attempts < target * 4 + 16) {
                ++attempts;
                const auto* a = pools[0][rng.next(pools[0].size())];
                const auto* b = pools[1][rng.next(pools[1].size())];
                if (!seen.insert(tuple_text(a->second) + "|" + tuple_text(b->second)).second)
                    continue;
                RelationshipInstance inst;
                inst.role_keys = {a->second, b->second};
                inst.descriptive = make_desc();
                list.push_back(std::move(inst));
            }
        }
        if (list.empty()) out.relationships.erase(name);
    }

    return conform_dataset(schema, out);
}

} // namespace erdb
