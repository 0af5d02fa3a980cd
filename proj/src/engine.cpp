#include "erdb/engine.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "erdb/compiler.hpp"
#include "erdb/er_model.hpp"

namespace erdb {

namespace {

// ---------------------------------------------------------------------------
// plan execution
// ---------------------------------------------------------------------------

ResultTable exec(const Store& store, const PlanNode& plan);

/// Canonical text of a column tuple, used as hash/group key.
std::string tuple_key(const Row& row, const std::vector<int>& cols) {
    std::string out;
    for (int c : cols) {
        row.at(static_cast<size_t>(c)).canonical_into(out);
        out.push_back('\x1f');
    }
    return out;
}

Value operand_value(const PlanPredicate::Operand& o, const Row& row) {
    return o.is_column() ? row.at(static_cast<size_t>(o.column)) : o.literal;
}

bool eval_predicate(const PlanPredicate& p, const Row& row) {
    switch (p.kind) {
    case PlanPredicate::Kind::Compare: {
        int c = operand_value(p.lhs, row).compare(operand_value(p.rhs, row));
        switch (p.op) {
        case PlanPredicate::CmpOp::Eq: return c == 0;
        case PlanPredicate::CmpOp::Ne: return c != 0;
        case PlanPredicate::CmpOp::Lt: return c < 0;
        case PlanPredicate::CmpOp::Le: return c <= 0;
        case PlanPredicate::CmpOp::Gt: return c > 0;
        case PlanPredicate::CmpOp::Ge: return c >= 0;
        }
        return false;
    }
    case PlanPredicate::Kind::In: {
        Value v = operand_value(p.lhs, row);
        for (const auto& e : p.in_list)
            if (v.compare(e) == 0) return true;
        return false;
    }
    case PlanPredicate::Kind::And:
        for (const auto& c : p.children)
            if (!eval_predicate(c, row)) return false;
        return true;
    case PlanPredicate::Kind::Or:
        for (const auto& c : p.children)
            if (eval_predicate(c, row)) return true;
        return false;
    case PlanPredicate::Kind::Not:
        return !eval_predicate(p.children.at(0), row);
    }
    return false;
}

ResultTable exec_scan(const Store& store, const PlanNode& plan) {
    auto it = store.fragments.find(plan.fragment);
    if (it == store.fragments.end())
        throw Error("plan scans unknown fragment '" + plan.fragment + "'");
    const FragmentStore& fs = it->second;

    ResultTable out;
    out.columns = plan.columns;

    bool left = false, right = false, edges = false;
    for (const auto& sc : plan.scan_columns) {
        if (sc.section == Section::Left) left = true;
        if (sc.section == Section::Right) right = true;
        if (sc.section == Section::Edges) edges = true;
    }

    if (edges || (left && right)) {
        // Adjacency-driven: one output row per edge; row-group columns are
        // resolved through the edge's side keys.
        for (const auto& [ktext, edge] : fs.edges) {
            const Row* lrow = nullptr;
            const Row* rrow = nullptr;
            if (left) {
                auto hit = fs.left_rows.find(row_key_text(edge, fs.edge_left_key_idx));
                if (hit == fs.left_rows.end())
                    throw Error("adjacency in '" + plan.fragment + "' references a missing left row");
                lrow = &hit->second;
            }
            if (right) {
                auto hit = fs.right_rows.find(row_key_text(edge, fs.edge_right_key_idx));
                if (hit == fs.right_rows.end())
                    throw Error("adjacency in '" + plan.fragment + "' references a missing right row");
                rrow = &hit->second;
            }
            Row r;
            r.reserve(plan.scan_columns.size());
            for (const auto& sc : plan.scan_columns) {
                switch (sc.section) {
                case Section::Edges: r.push_back(edge.at(static_cast<size_t>(sc.index))); break;
                case Section::Left: r.push_back(lrow->at(static_cast<size_t>(sc.index))); break;
                case Section::Right: r.push_back(rrow->at(static_cast<size_t>(sc.index))); break;
                case Section::Whole:
                    throw Error("adjacency scan cannot read whole-row columns");
                }
            }
            out.rows.push_back(std::move(r));
        }
        return out;
    }

    Section sec = left ? Section::Left : right ? Section::Right : Section::Whole;
    for (const auto& [ktext, row] : fs.section(sec)) {
        Row r;
        r.reserve(plan.scan_columns.size());
        for (const auto& sc : plan.scan_columns) r.push_back(row.at(static_cast<size_t>(sc.index)));
        out.rows.push_back(std::move(r));
    }
    return out;
}

ResultTable exec_join(const Store& store, const PlanNode& plan) {
    ResultTable l = exec(store, plan.children.at(0));
    ResultTable r = exec(store, plan.children.at(1));

    std::vector<int> lk, rk;
    for (const auto& [a, b] : plan.join_keys) {
        lk.push_back(a);
        rk.push_back(b);
    }

    // Hash the right side; iterate the left side in order so output order is
    // the left order (with right matches in right-row order within a key).
    std::map<std::string, std::vector<size_t>> index;
    for (size_t i = 0; i < r.rows.size(); ++i) index[tuple_key(r.rows[i], rk)].push_back(i);

    ResultTable out;
    out.columns = plan.columns;
    const size_t rwidth = r.columns.size();
    for (const auto& lrow : l.rows) {
        auto hit = index.find(tuple_key(lrow, lk));
        if (hit != index.end()) {
            for (size_t ri : hit->second) {
                Row o = lrow;
                o.insert(o.end(), r.rows[ri].begin(), r.rows[ri].end());
                out.rows.push_back(std::move(o));
            }
        } else if (plan.join_kind == PlanNode::JoinKind::LeftOuter) {
            Row o = lrow;
            o.resize(lrow.size() + rwidth); // absent-filled right side
            for (int c : plan.coalesce_empty_arrays)
                o.at(static_cast<size_t>(c)) = Value{Value::Array{}};
            out.rows.push_back(std::move(o));
        }
    }
    return out;
}

/// Navigates a composite by field path; absent when any step is missing.
Value element_field(const Value& elem, const std::vector<std::string>& path) {
    const Value* cur = &elem;
    for (const auto& p : path) {
        if (!cur->is_composite()) return Value{};
        auto it = cur->as_composite().find(p);
        if (it == cur->as_composite().end()) return Value{};
        cur = &it->second;
    }
    return *cur;
}

std::vector<std::string> split_dotted(const std::string& s) {
    std::vector<std::string> parts;
    size_t at = 0;
    while (at <= s.size()) {
        size_t dot = s.find('.', at);
        if (dot == std::string::npos) {
            parts.push_back(s.substr(at));
            break;
        }
        parts.push_back(s.substr(at, dot - at));
        at = dot + 1;
    }
    return parts;
}

ResultTable exec_unnest(const Store& store, const PlanNode& plan) {
    ResultTable in = exec(store, plan.children.at(0));

    ResultTable out;
    out.columns = plan.columns;

    const size_t base = in.columns.size();
    const size_t col = static_cast<size_t>(plan.unnest_column);
    // Appended leaf columns are named "<array column>.<field path>"; the
    // element column itself sits at index `base`.
    const std::string prefix = in.columns.at(col).name + ".";
    std::vector<std::vector<std::string>> leaf_paths;
    for (size_t i = base + 1; i < plan.columns.size(); ++i)
        leaf_paths.push_back(split_dotted(plan.columns[i].name.substr(prefix.size())));

    for (const auto& row : in.rows) {
        const Value& arr = row.at(col);
        const bool empty = !arr.is_array() || arr.as_array().empty();
        if (empty) {
            if (plan.unnest_outer) {
                Row o = row;
                o.resize(plan.columns.size()); // absent element and leaves
                out.rows.push_back(std::move(o));
            }
            continue;
        }
        for (const auto& elem : arr.as_array()) {
            Row o = row;
            o.push_back(elem);
            for (const auto& path : leaf_paths) o.push_back(element_field(elem, path));
            out.rows.push_back(std::move(o));
        }
    }
    return out;
}

/// Assembles one projected value; composites drop absent members, matching
/// document conformance (a missing optional field is omitted, not null).
Value pack_value(const PackSpec& spec, const Row& row) {
    if (spec.is_column()) return row.at(static_cast<size_t>(spec.column));
    Value::Composite c;
    for (const auto& [name, sub] : spec.fields) {
        Value v = pack_value(sub, row);
        if (!v.is_absent()) c[name] = std::move(v);
    }
    return Value{std::move(c)};
}

ResultTable exec_project(const Store& store, const PlanNode& plan) {
    ResultTable in = exec(store, plan.children.at(0));
    ResultTable out;
    out.columns = plan.columns;
    for (const auto& row : in.rows) {
        Row o;
        o.reserve(plan.projections.size());
        for (const auto& item : plan.projections) o.push_back(pack_value(item.source, row));
        out.rows.push_back(std::move(o));
    }
    return out;
}

struct Groups {
    std::vector<std::string> order; // first-seen key order
    std::map<std::string, std::vector<size_t>> members;
};

Groups group_rows(const ResultTable& in, const std::vector<int>& keys) {
    Groups g;
    for (size_t i = 0; i < in.rows.size(); ++i) {
        std::string k = tuple_key(in.rows[i], keys);
        auto [it, fresh] = g.members.emplace(std::move(k), std::vector<size_t>{});
        if (fresh) g.order.push_back(it->first);
        it->second.push_back(i);
    }
    return g;
}

Value compute_agg(const PlanNode::AggSpec& agg, const ResultTable& in,
                  const std::vector<size_t>& rows) {
    const size_t col = static_cast<size_t>(agg.column);
    if (agg.fn == "count") {
        int64_t n = 0;
        for (size_t r : rows)
            if (!in.rows[r].at(col).is_absent()) ++n;
        return Value{n};
    }
    if (agg.fn == "sum") {
        bool any = false, is_float = false;
        int64_t si = 0;
        double sf = 0;
        for (size_t r : rows) {
            const Value& v = in.rows[r].at(col);
            if (v.is_absent()) continue;
            any = true;
            if (v.is_float()) {
                if (!is_float) {
                    sf = static_cast<double>(si);
                    is_float = true;
                }
                sf += v.as_float();
            } else if (is_float) {
                sf += static_cast<double>(v.as_int());
            } else {
                si += v.as_int();
            }
        }
        if (!any) return Value{};
        return is_float ? Value{sf} : Value{si};
    }
    if (agg.fn == "avg") {
        int64_t n = 0;
        double s = 0;
        for (size_t r : rows) {
            const Value& v = in.rows[r].at(col);
            if (v.is_absent()) continue;
            s += v.is_float() ? v.as_float() : static_cast<double>(v.as_int());
            ++n;
        }
        if (n == 0) return Value{};
        return Value{s / static_cast<double>(n)};
    }
    if (agg.fn == "min" || agg.fn == "max") {
        const bool want_min = agg.fn == "min";
        Value best;
        bool any = false;
        for (size_t r : rows) {
            const Value& v = in.rows[r].at(col);
            if (v.is_absent()) continue;
            if (!any || (want_min ? v.compare(best) < 0 : v.compare(best) > 0)) best = v;
            any = true;
        }
        return best;
    }
    throw Error("unknown aggregate '" + agg.fn + "'");
}

/// Builds a nested composite from dotted leaf names.
Value build_nested_fields(const std::map<std::string, Value>& flat) {
    Value::Composite out;
    std::map<std::string, std::map<std::string, Value>> subs;
    for (const auto& [name, v] : flat) {
        size_t dot = name.find('.');
        if (dot == std::string::npos)
            out[name] = v;
        else
            subs[name.substr(0, dot)][name.substr(dot + 1)] = v;
    }
    for (auto& [head, sub] : subs) out[head] = build_nested_fields(sub);
    return Value{std::move(out)};
}

/// One nested-array element: a bare value for the single unnamed field, a
/// composite (absent members dropped) otherwise.
Value nest_element(const PlanNode::NestSpec& spec, const Row& row) {
    if (spec.fields.size() == 1 && spec.fields[0].second.empty())
        return row.at(static_cast<size_t>(spec.fields[0].first));
    std::map<std::string, Value> flat;
    for (const auto& [col, name] : spec.fields) {
        const Value& v = row.at(static_cast<size_t>(col));
        if (v.is_absent()) continue;
        flat[name] = v;
    }
    return build_nested_fields(flat);
}

ResultTable exec_group(const Store& store, const PlanNode& plan) {
    ResultTable in = exec(store, plan.children.at(0));
    Groups g = group_rows(in, plan.group_keys);

    ResultTable out;
    out.columns = plan.columns;

    if (plan.op == PlanNode::Op::Aggregate && plan.group_keys.empty() && g.order.empty()) {
        // Global aggregate over no rows still yields one row.
        Row o;
        for (const auto& agg : plan.aggs)
            o.push_back(agg.fn == "count" ? Value{static_cast<int64_t>(0)} : Value{});
        out.rows.push_back(std::move(o));
        return out;
    }

    for (const auto& ktext : g.order) {
        const std::vector<size_t>& rows = g.members.at(ktext);
        Row o;
        for (int k : plan.group_keys) o.push_back(in.rows[rows.front()].at(static_cast<size_t>(k)));
        for (const auto& agg : plan.aggs) o.push_back(compute_agg(agg, in, rows));
        for (const auto& nest : plan.nests) {
            Value::Array arr;
            arr.reserve(rows.size());
            for (size_t r : rows) arr.push_back(nest_element(nest, in.rows[r]));
            std::sort(arr.begin(), arr.end(),
                      [](const Value& a, const Value& b) { return a.compare(b) < 0; });
            o.push_back(Value{std::move(arr)});
        }
        out.rows.push_back(std::move(o));
    }
    return out;
}

ResultTable exec(const Store& store, const PlanNode& plan) {
    switch (plan.op) {
    case PlanNode::Op::Scan: return exec_scan(store, plan);
    case PlanNode::Op::Filter: {
        ResultTable in = exec(store, plan.children.at(0));
        ResultTable out;
        out.columns = plan.columns;
        for (auto& row : in.rows)
            if (eval_predicate(plan.predicate, row)) out.rows.push_back(std::move(row));
        return out;
    }
    case PlanNode::Op::Join: return exec_join(store, plan);
    case PlanNode::Op::UnionAll: {
        ResultTable out;
        out.columns = plan.columns;
        for (const auto& child : plan.children) {
            ResultTable part = exec(store, child);
            for (auto& row : part.rows) out.rows.push_back(std::move(row));
        }
        return out;
    }
    case PlanNode::Op::Unnest: return exec_unnest(store, plan);
    case PlanNode::Op::Project: return exec_project(store, plan);
    case PlanNode::Op::GroupNest:
    case PlanNode::Op::Aggregate: return exec_group(store, plan);
    }
    throw Error("unknown plan operator");
}

} // namespace

ResultTable execute(const Store& store, const PlanNode& plan) { return exec(store, plan); }

// ---------------------------------------------------------------------------
// normalization, fingerprints, rendering
// ---------------------------------------------------------------------------

ResultTable normalize_result(const ResultTable& table) {
    ResultTable out;
    out.columns = table.columns;
    out.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        Row r;
        r.reserve(row.size());
        for (const auto& v : row) r.push_back(normalize_deep(v));
        out.rows.push_back(std::move(r));
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const Row& a, const Row& b) {
        for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
            int c = a[i].compare(b[i]);
            if (c != 0) return c < 0;
        }
        return a.size() < b.size();
    });
    return out;
}

std::string result_fingerprint(const ResultTable& table) {
    ResultTable n = normalize_result(table);
    std::string text;
    for (const auto& col : n.columns) {
        text += col.name;
        text += ':';
        text += col.type.to_string();
        text += '\x1f';
    }
    text += '\n';
    for (const auto& row : n.rows) {
        for (const auto& v : row) {
            v.canonical_into(text);
            text += '\x1f';
        }
        text += '\n';
    }
    return fnv1a64_hex(text);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_cell(const Value& v) {
    if (v.is_absent()) return "";
    if (v.is_string()) return csv_field(v.as_string());
    return csv_field(v.canonical()); // scalars plain; nested in canonical text
}

} // namespace

std::string result_to_csv(const ResultTable& table) {
    std::string out;
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += csv_field(table.columns[i].name);
    }
    out += "\r\n";
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_cell(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

std::string result_to_text(const ResultTable& table) {
    std::string out;
    for (const auto& row : table.rows) {
        out += '{';
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ", ";
            out += i < table.columns.size() ? table.columns[i].name : "?";
            out += ": ";
            row[i].canonical_into(out);
        }
        out += "}\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// bulk load
// ---------------------------------------------------------------------------

Store materialize(const ErSchema& schema, const Mapping& mapping, const Dataset& dataset) {
    Dataset d = conform_dataset(schema, dataset);
    Store store = create_store(mapping);

    // Owners load before their weak dependents: order classes by the length
    // of the ownership chain above their hierarchy root.
    std::vector<std::string> classes;
    for (const auto& [cls, docs] : d.entities) classes.push_back(cls);
    auto owner_depth = [&](const std::string& cls) {
        int n = 0;
        std::string cur = schema.root_of(cls).name;
        while (schema.entity(cur).is_weak()) {
            cur = schema.root_of(schema.entity(cur).weak_owner->owner).name;
            ++n;
        }
        return n;
    };
    std::stable_sort(classes.begin(), classes.end(), [&](const std::string& a, const std::string& b) {
        return owner_depth(a) < owner_depth(b);
    });

    for (const auto& cls : classes) {
        for (const auto& doc : d.entities.at(cls)) {
            WriteSet ws;
            build_entity_insert(schema, mapping, cls, doc, ws);
            apply_writes(store, ws);
        }
    }
    for (const auto& [rname, insts] : d.relationships) {
        for (const auto& inst : insts) {
            WriteSet ws;
            build_relationship_insert(schema, mapping, rname, inst.role_keys, inst.descriptive, ws);
            apply_writes(store, ws);
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// reconstruction
// ---------------------------------------------------------------------------

namespace {

struct ParsedAttr {
    std::string object;
    std::vector<std::string> path;
};

ParsedAttr parse_attr_node(const std::string& node) {
    ParsedAttr out;
    std::vector<std::string> parts = split_dotted(node.substr(5)); // past "attr:"
    out.object = parts.front();
    out.path.assign(parts.begin() + 1, parts.end());
    return out;
}

std::string dotted(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += '.';
        out += parts[i];
    }
    return out;
}

/// One logical instance under reassembly: the deepest concrete class seen so
/// far and every attribute value found in any fragment, keyed by dotted path.
struct InstanceAcc {
    std::string cls;
    std::map<std::string, Value> fields;       // attr path → stored value
    std::map<std::string, Value::Array> elems; // mv attr path → collected rows
};

struct Rebuild {
    const ErSchema& schema;
    // hierarchy root (or weak entity) → key tuple text → accumulator
    std::map<std::string, std::map<std::string, InstanceAcc>> insts;
    std::map<std::string, std::map<std::string, RelationshipInstance>> rels;

    explicit Rebuild(const ErSchema& s) : schema(s) {}

    InstanceAcc& instance(const std::string& anchor, const std::vector<Value>& key,
                          std::string* where_out = nullptr) {
        const std::string root = schema.chain_of(anchor).front();
        std::string ktext;
        for (const auto& v : key) {
            v.canonical_into(ktext);
            ktext.push_back('\x1f');
        }
        if (where_out) {
            *where_out = root + " (";
            for (size_t i = 0; i < key.size(); ++i) {
                if (i) *where_out += ", ";
                key[i].canonical_into(*where_out);
            }
            *where_out += ")";
        }
        return insts[root][ktext];
    }

    void merge_class(InstanceAcc& acc, const std::string& cand, const std::string& where) {
        if (acc.cls.empty() || schema.is_subclass_of(cand, acc.cls)) {
            acc.cls = cand;
            return;
        }
        if (schema.is_subclass_of(acc.cls, cand)) return;
        throw Error("inconsistent duplicates: " + where + " is recorded both as '" + acc.cls +
                    "' and as '" + cand + "'");
    }

    void put_field(InstanceAcc& acc, const std::string& path, const Value& v,
                   const std::string& where) {
        auto [it, fresh] = acc.fields.emplace(path, v);
        if (!fresh && it->second.compare(v) != 0)
            throw Error("inconsistent duplicates: " + where + "." + path + " is stored both as " +
                        it->second.canonical() + " and as " + v.canonical());
    }

    void put_relationship(const std::string& rname, RelationshipInstance inst) {
        std::string ktext;
        for (const auto& tup : inst.role_keys) {
            for (const auto& v : tup) {
                v.canonical_into(ktext);
                ktext.push_back('\x1f');
            }
            ktext.push_back('\x1e');
        }
        auto& bucket = rels[rname];
        auto it = bucket.find(ktext);
        if (it == bucket.end()) {
            bucket.emplace(std::move(ktext), std::move(inst));
            return;
        }
        if (it->second.descriptive.compare(inst.descriptive) != 0)
            throw Error("inconsistent duplicates: relationship '" + rname +
                        "' stores two conflicting descriptive values");
    }
};

int column_index(const std::vector<Column>& cols, const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == name) return static_cast<int>(i);
    return -1;
}

/// Key-closure values of the instance a row hosts, in closure order.
std::vector<Value> closure_values(const ErSchema& schema, const std::string& anchor,
                                  const std::vector<Column>& cols, const Row& row) {
    std::vector<Value> out;
    for (const auto& part : key_closure(schema, anchor)) {
        int i = column_index(cols, part.entity + "_" + part.attribute);
        if (i < 0)
            throw Error("fragment misses key column '" + part.entity + "_" + part.attribute + "'");
        out.push_back(row.at(static_cast<size_t>(i)));
    }
    return out;
}

/// Folds one embedded weak-entity element (plus its owner's key closure,
/// taken from the host row) into the weak entity's accumulator.
void absorb_embedded_element(Rebuild& rb, const ErSchema& schema, const std::string& weak,
                             const std::string& host_anchor, const std::vector<Column>& host_cols,
                             const Row& host_row, const Value& elem) {
    if (!elem.is_composite()) throw Error("embedded '" + weak + "' element is not a composite");

    std::set<std::string> own_chain;
    for (const auto& cls : schema.chain_of(weak)) own_chain.insert(cls);

    std::vector<Value> key;
    std::vector<std::pair<std::string, Value>> owner_fields;
    for (const auto& part : key_closure(schema, weak)) {
        if (own_chain.count(part.entity)) {
            key.push_back(element_field(elem, {part.attribute}));
        } else {
            int i = column_index(host_cols, part.entity + "_" + part.attribute);
            if (i < 0)
                throw Error("host of embedded '" + weak + "' misses key column '" + part.entity +
                            "_" + part.attribute + "'");
            key.push_back(host_row.at(static_cast<size_t>(i)));
            owner_fields.emplace_back(part.attribute, key.back());
        }
    }
    (void)host_anchor;

    std::string where;
    InstanceAcc& acc = rb.instance(weak, key, &where);
    rb.merge_class(acc, weak, where);
    for (const auto& [name, v] : owner_fields) rb.put_field(acc, name, v, where);
    for (const auto& [name, v] : elem.as_composite()) {
        if (v.is_absent()) continue;
        rb.put_field(acc, name, v, where);
    }
}

/// Absorbs one entity-hosting row (an entity fragment's row or one row-group
/// member of a factorized fragment).
void absorb_entity_row(Rebuild& rb, const ErSchema& schema, const std::string& anchor, bool exact,
                       const std::vector<Column>& cols, const Row& row,
                       const std::vector<FoldedFk>& fks) {
    std::vector<Value> key = closure_values(schema, anchor, cols, row);
    std::string where;
    InstanceAcc& acc = rb.instance(anchor, key, &where);

    int type_col = -1;
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].node.empty() && cols[i].name == "type") type_col = static_cast<int>(i);

    if (type_col >= 0 && row.at(static_cast<size_t>(type_col)).is_string())
        rb.merge_class(acc, row.at(static_cast<size_t>(type_col)).as_string(), where);
    else
        rb.merge_class(acc, anchor, where); // exact or lower bound; deepest wins
    (void)exact;

    for (size_t i = 0; i < cols.size(); ++i) {
        if (static_cast<int>(i) == type_col) continue;
        const Value& v = row[i];
        if (v.is_absent()) continue;
        const std::string& node = cols[i].node;
        if (node.rfind("attr:", 0) == 0) {
            ParsedAttr a = parse_attr_node(node);
            rb.put_field(acc, dotted(a.path), v, where);
        } else if (node.rfind("entity:", 0) == 0) {
            const std::string weak = node.substr(7);
            if (!v.is_array())
                throw Error("embedded '" + weak + "' column does not hold an array");
            for (const auto& elem : v.as_array())
                absorb_embedded_element(rb, schema, weak, anchor, cols, row, elem);
        }
        // relationship: foreign-key columns are handled via folded_fks below
    }

    for (const auto& fk : fks) {
        const RelationshipDef& rel = rb.schema.relationship(fk.relationship);
        const RelationshipParticipant* one_side = rel.find_role(fk.fk_role);
        if (!one_side) throw Error("folded '" + fk.relationship + "' names unknown role");
        std::vector<Value> fk_key;
        bool linked = true;
        for (const auto& part : key_closure(schema, one_side->entity)) {
            int i = column_index(cols, fk.fk_role + "_" + part.attribute);
            if (i < 0)
                throw Error("folded '" + fk.relationship + "' misses column '" + fk.fk_role + "_" +
                            part.attribute + "'");
            const Value& cv = row.at(static_cast<size_t>(i));
            if (cv.is_absent()) linked = false;
            fk_key.push_back(cv);
        }
        if (!linked) continue;
        RelationshipInstance inst;
        for (const auto& p : rel.participants)
            inst.role_keys.push_back(p.role == fk.fk_role ? fk_key : key);
        rb.put_relationship(fk.relationship, std::move(inst));
    }
}

/// Descriptive attribute values of a relationship row or adjacency entry.
Value descriptive_of(const std::string& rname, const std::vector<Column>& cols, const Row& row) {
    std::map<std::string, Value> flat;
    for (size_t i = 0; i < cols.size(); ++i) {
        if (cols[i].node.rfind("attr:" + rname + ".", 0) != 0) continue;
        if (row[i].is_absent()) continue;
        ParsedAttr a = parse_attr_node(cols[i].node);
        flat[dotted(a.path)] = row[i];
    }
    return build_nested_fields(flat);
}

RelationshipInstance relationship_of_row(const ErSchema& schema, const std::string& rname,
                                         const std::vector<Column>& cols, const Row& row) {
    const RelationshipDef& rel = schema.relationship(rname);
    RelationshipInstance inst;
    for (const auto& p : rel.participants) {
        std::vector<Value> tup;
        for (const auto& part : key_closure(schema, p.entity)) {
            int i = column_index(cols, p.role + "_" + part.attribute);
            if (i < 0)
                throw Error("relationship fragment misses column '" + p.role + "_" +
                            part.attribute + "'");
            tup.push_back(row.at(static_cast<size_t>(i)));
        }
        inst.role_keys.push_back(std::move(tup));
    }
    inst.descriptive = descriptive_of(rname, cols, row);
    return inst;
}

void absorb_mv_row(Rebuild& rb, const ErSchema& schema, const Fragment& frag, const Row& row) {
    std::vector<Value> key = closure_values(schema, frag.anchor, frag.columns, row);
    std::string where;
    InstanceAcc& acc = rb.instance(frag.anchor, key, &where);
    rb.merge_class(acc, frag.anchor, where);

    ParsedAttr mv = parse_attr_node(frag.mv_node);
    std::map<std::string, Value> flat;
    Value scalar_elem;
    bool have_scalar = false;
    for (size_t i = 0; i < frag.columns.size(); ++i) {
        const Column& col = frag.columns[i];
        if (col.node == frag.mv_node) {
            scalar_elem = row[i];
            have_scalar = true;
        } else if (col.node.rfind("attr:", 0) == 0) {
            ParsedAttr a = parse_attr_node(col.node);
            if (a.object == mv.object && a.path.size() > mv.path.size() &&
                std::equal(mv.path.begin(), mv.path.end(), a.path.begin())) {
                if (!row[i].is_absent())
                    flat[dotted({a.path.begin() + static_cast<long>(mv.path.size()), a.path.end()})] =
                        row[i];
            }
            // owner key-closure columns are consumed by closure_values above
        }
    }
    acc.elems[dotted(mv.path)].push_back(have_scalar ? scalar_elem : build_nested_fields(flat));
}

std::vector<FoldedFk> group_fks(const ErSchema& schema, const Fragment& frag,
                                const std::string& cls) {
    std::vector<FoldedFk> out;
    const RelationshipDef& rel = schema.relationship(frag.factorized.relationship);
    for (const auto& fk : frag.folded_fks)
        for (const auto& p : rel.participants)
            if (p.role == fk.host_role && p.entity == cls) out.push_back(fk);
    return out;
}

} // namespace

Dataset reconstruct_entities(const Store& store, const ErSchema& schema) {
    Rebuild rb(schema);

    for (const auto& frag : store.mapping.fragments) {
        auto fit = store.fragments.find(frag.name);
        if (fit == store.fragments.end())
            throw Error("store misses fragment '" + frag.name + "'");
        const FragmentStore& fs = fit->second;

        switch (frag.kind) {
        case Fragment::Kind::EntityRows:
            for (const auto& [k, row] : fs.rows)
                absorb_entity_row(rb, schema, frag.anchor, frag.exact, frag.columns, row,
                                  frag.folded_fks);
            break;
        case Fragment::Kind::MultiValueRows:
            for (const auto& [k, row] : fs.rows) absorb_mv_row(rb, schema, frag, row);
            break;
        case Fragment::Kind::RelationshipRows:
            for (const auto& [k, row] : fs.rows)
                rb.put_relationship(frag.relationship,
                                    relationship_of_row(schema, frag.relationship, frag.columns, row));
            break;
        case Fragment::Kind::FactorizedRows:
            for (const auto& [k, row] : fs.left_rows)
                absorb_entity_row(rb, schema, frag.factorized.left, false, frag.left_columns, row,
                                  group_fks(schema, frag, frag.factorized.left));
            for (const auto& [k, row] : fs.right_rows)
                absorb_entity_row(rb, schema, frag.factorized.right, false, frag.right_columns, row,
                                  group_fks(schema, frag, frag.factorized.right));
            for (const auto& [k, row] : fs.edges)
                rb.put_relationship(frag.factorized.relationship,
                                    relationship_of_row(schema, frag.factorized.relationship,
                                                        frag.edge_columns, row));
            break;
        }
    }

    Dataset raw;
    for (auto& [root, by_key] : rb.insts) {
        for (auto& [ktext, acc] : by_key) {
            for (auto& [path, elems] : acc.elems) {
                std::sort(elems.begin(), elems.end(),
                          [](const Value& a, const Value& b) { return a.compare(b) < 0; });
                Value arr{std::move(elems)};
                auto it = acc.fields.find(path);
                if (it == acc.fields.end())
                    acc.fields.emplace(path, std::move(arr));
                else if (it->second.compare(arr) != 0)
                    throw Error("inconsistent duplicates: " + root + "." + path +
                                " is stored both nested and exploded with different elements");
            }
            raw.entities[acc.cls].push_back(build_nested_fields(acc.fields));
        }
    }
    for (auto& [rname, by_key] : rb.rels)
        for (auto& [ktext, inst] : by_key) raw.relationships[rname].push_back(std::move(inst));

    // Conformance re-sorts instance lists, normalizes documents (missing
    // multi-valued attributes become empty arrays), and re-validates keys
    // and references, so the result is byte-comparable with the source.
    return conform_dataset(schema, raw);
}

} // namespace erdb
