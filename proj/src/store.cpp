#include "erdb/store.hpp"

#include <algorithm>
#include <functional>

namespace erdb {

const std::map<std::string, Row>& FragmentStore::section(Section s) const {
    switch (s) {
    case Section::Whole: return rows;
    case Section::Left: return left_rows;
    case Section::Right: return right_rows;
    case Section::Edges: return edges;
    }
    return rows;
}

std::map<std::string, Row>& FragmentStore::section(Section s) {
    return const_cast<std::map<std::string, Row>&>(
        static_cast<const FragmentStore*>(this)->section(s));
}

const std::vector<int>& FragmentStore::section_key_idx(Section s) const {
    switch (s) {
    case Section::Whole: return key_idx;
    case Section::Left: return left_key_idx;
    case Section::Right: return right_key_idx;
    case Section::Edges: return edge_key_idx;
    }
    return key_idx;
}

size_t Store::row_count() const {
    size_t n = 0;
    for (const auto& [name, f] : fragments)
        n += f.rows.size() + f.left_rows.size() + f.right_rows.size() + f.edges.size();
    return n;
}

bool Store::operator==(const Store& other) const {
    if (fragments.size() != other.fragments.size()) return false;
    for (const auto& [name, f] : fragments) {
        auto it = other.fragments.find(name);
        if (it == other.fragments.end()) return false;
        if (f.rows != it->second.rows || f.left_rows != it->second.left_rows ||
            f.right_rows != it->second.right_rows || f.edges != it->second.edges)
            return false;
    }
    return true;
}

std::string row_key_text(const Row& row, const std::vector<int>& idx) {
    std::string out;
    for (int i : idx) {
        row[static_cast<size_t>(i)].canonical_into(out);
        out += '\x1f';
    }
    return out;
}

namespace {

std::vector<int> key_indices(const std::vector<Column>& cols) {
    std::vector<int> out;
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].key) out.push_back(static_cast<int>(i));
    return out;
}

} // namespace

Store create_store(const Mapping& mapping) {
    Store store;
    store.mapping = mapping;
    for (const auto& frag : mapping.fragments) {
        FragmentStore fs;
        if (frag.kind == Fragment::Kind::FactorizedRows) {
            fs.left_key_idx = key_indices(frag.left_columns);
            fs.right_key_idx = key_indices(frag.right_columns);
            fs.edge_key_idx = key_indices(frag.edge_columns);
            // edge columns are laid out left role's key closure first, then
            // the right role's, in the same order as the group key columns
            for (size_t i = 0; i < fs.left_key_idx.size(); ++i)
                fs.edge_left_key_idx.push_back(static_cast<int>(i));
            for (size_t i = 0; i < fs.right_key_idx.size(); ++i)
                fs.edge_right_key_idx.push_back(static_cast<int>(fs.left_key_idx.size() + i));
        } else {
            fs.key_idx = key_indices(frag.columns);
        }
        store.fragments[frag.name] = std::move(fs);
    }
    return store;
}

namespace {

struct ApplyContext {
    Store& store;
    std::vector<std::function<void()>> undo;

    [[noreturn]] void fail(const std::string& msg) { throw Error(msg); }
};

const std::vector<Column>& section_columns(const Fragment& frag, Section s) {
    switch (s) {
    case Section::Whole: return frag.columns;
    case Section::Left: return frag.left_columns;
    case Section::Right: return frag.right_columns;
    case Section::Edges: return frag.edge_columns;
    }
    return frag.columns;
}

int column_index(const std::vector<Column>& cols, const std::string& name, const std::string& where) {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == name) return static_cast<int>(i);
    throw Error("no column '" + name + "' in " + where);
}

bool row_matches(const Row& row, const std::vector<std::pair<int, Value>>& eqs) {
    for (const auto& [idx, v] : eqs)
        if (!(row[static_cast<size_t>(idx)] == v)) return false;
    return true;
}

/// Sorted-set insertion position; -1 if an equal element exists.
int sorted_pos(const Value::Array& arr, const Value& elem) {
    size_t lo = 0;
    for (; lo < arr.size(); ++lo) {
        int c = arr[lo].compare(elem);
        if (c == 0) return -1;
        if (c > 0) break;
    }
    return static_cast<int>(lo);
}

class ActionRunner {
public:
    ActionRunner(ApplyContext& ctx, const WriteAction& a) : ctx_(ctx), a_(a) {
        auto fit = ctx.store.fragments.find(a.fragment);
        if (fit == ctx.store.fragments.end())
            ctx.fail("write targets unknown fragment '" + a.fragment + "'");
        fs_ = &fit->second;
        frag_ = ctx.store.mapping.find_fragment(a.fragment);
        if (!frag_) ctx.fail("write targets unknown fragment '" + a.fragment + "'");
        cols_ = &section_columns(*frag_, a.section);
        where_ = a.fragment;
        if (a.section != Section::Whole) where_ += std::string(".") + section_name(a.section);
    }

    void run() {
        switch (a_.kind) {
        case WriteAction::Kind::Insert: insert(); break;
        case WriteAction::Kind::Update: update(); break;
        case WriteAction::Kind::Delete: erase(); break;
        case WriteAction::Kind::ArrayAppend: array_edit(true); break;
        case WriteAction::Kind::ArrayRemove: array_edit(false); break;
        case WriteAction::Kind::NestedInsert: nested_insert(); break;
        case WriteAction::Kind::NestedUpdate: nested_update(); break;
        case WriteAction::Kind::NestedDelete: nested_delete(); break;
        }
    }

private:
    ApplyContext& ctx_;
    const WriteAction& a_;
    FragmentStore* fs_ = nullptr;
    const Fragment* frag_ = nullptr;
    const std::vector<Column>* cols_ = nullptr;
    std::string where_;

    std::map<std::string, Row>& rows() { return fs_->section(a_.section); }
    const std::vector<int>& keys() { return fs_->section_key_idx(a_.section); }

    int col(const std::string& name) { return column_index(*cols_, name, where_); }

    std::vector<std::pair<int, Value>> resolve(const std::vector<std::pair<std::string, Value>>& eqs) {
        std::vector<std::pair<int, Value>> out;
        for (const auto& [name, v] : eqs) out.emplace_back(col(name), v);
        return out;
    }

    std::vector<std::string> matched_keys() {
        auto eqs = resolve(a_.match);
        std::vector<std::string> out;
        for (const auto& [key, row] : rows())
            if (row_matches(row, eqs)) out.push_back(key);
        return out;
    }

    void check_guards(const Row& row) {
        for (const auto& [idx, v] : resolve(a_.guard_equal))
            if (!(row[static_cast<size_t>(idx)] == v))
                ctx_.fail("guard failed in " + where_ + ": '" + (*cols_)[static_cast<size_t>(idx)].name +
                          "' is " + row[static_cast<size_t>(idx)].canonical() + ", expected " +
                          v.canonical());
        for (const auto& name : a_.guard_absent) {
            int idx = col(name);
            if (!row[static_cast<size_t>(idx)].is_absent())
                ctx_.fail("cardinality violation in " + where_ + ": '" + name +
                          "' is already linked");
        }
    }

    void check_no_other_row(const std::string& self_key) {
        if (a_.guard_no_other_row.empty()) return;
        auto eqs = resolve(a_.guard_no_other_row);
        for (const auto& [key, row] : rows())
            if (key != self_key && row_matches(row, eqs))
                ctx_.fail("cardinality violation in " + where_ + ": value already linked to "
                          "another row");
    }

    /// Edge actions must reference existing row-group members; group-member
    /// deletes must not strand edges.
    void check_edge_refs(const Row& edge) {
        auto referenced = [&](Section side, const std::vector<int>& edge_idx) {
            Row key_vals;
            for (int i : edge_idx) key_vals.push_back(edge[static_cast<size_t>(i)]);
            std::vector<int> all(key_vals.size());
            for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
            if (!fs_->section(side).count(row_key_text(key_vals, all)))
                ctx_.fail("adjacency in '" + a_.fragment + "' references a missing " +
                          section_name(side) + " row");
        };
        referenced(Section::Left, fs_->edge_left_key_idx);
        referenced(Section::Right, fs_->edge_right_key_idx);
    }

    void check_not_referenced(const std::string& group_key) {
        const std::vector<int>& edge_idx =
            a_.section == Section::Left ? fs_->edge_left_key_idx : fs_->edge_right_key_idx;
        for (const auto& [ekey, edge] : fs_->edges) {
            Row key_vals;
            for (int i : edge_idx) key_vals.push_back(edge[static_cast<size_t>(i)]);
            std::vector<int> all(key_vals.size());
            for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
            if (row_key_text(key_vals, all) == group_key)
                ctx_.fail("cannot delete " + where_ + " row: adjacency entries still reference it");
        }
    }

    void insert() {
        Row row(cols_->size());
        for (const auto& [idx, v] : resolve(a_.set)) row[static_cast<size_t>(idx)] = v;
        for (int k : keys())
            if (row[static_cast<size_t>(k)].is_absent())
                ctx_.fail("insert into " + where_ + " misses key column '" +
                          (*cols_)[static_cast<size_t>(k)].name + "'");
        std::string key = row_key_text(row, keys());
        if (rows().count(key))
            ctx_.fail("duplicate key in " + where_ + ": " + key_tuple_text(row));
        check_no_other_row(key);
        if (a_.section == Section::Edges) check_edge_refs(row);
        rows().emplace(key, std::move(row));
        auto* m = &rows();
        ctx_.undo.push_back([m, key] { m->erase(key); });
    }

    void update() {
        auto sets = resolve(a_.set);
        for (const auto& [idx, v] : sets)
            for (int k : keys())
                if (k == idx) ctx_.fail("key columns are immutable (" + where_ + ")");
        for (const auto& key : matched_keys()) {
            Row& row = rows().at(key);
            check_guards(row);
            check_no_other_row(key);
            for (const auto& [idx, v] : sets) {
                auto* m = &rows();
                Value old = row[static_cast<size_t>(idx)];
                int i = idx;
                ctx_.undo.push_back(
                    [m, key, i, old] { m->at(key)[static_cast<size_t>(i)] = old; });
                row[static_cast<size_t>(idx)] = v;
            }
        }
    }

    void erase() {
        for (const auto& key : matched_keys()) {
            check_guards(rows().at(key));
            if (a_.section == Section::Left || a_.section == Section::Right)
                check_not_referenced(key);
            Row old = rows().at(key);
            rows().erase(key);
            auto* m = &rows();
            ctx_.undo.push_back([m, key, old] { m->emplace(key, old); });
        }
    }

    void cell_edit(const std::string& key, int idx, Value next) {
        auto* m = &rows();
        Value old = m->at(key)[static_cast<size_t>(idx)];
        ctx_.undo.push_back([m, key, idx, old] { m->at(key)[static_cast<size_t>(idx)] = old; });
        m->at(key)[static_cast<size_t>(idx)] = std::move(next);
    }

    void array_edit(bool append) {
        int idx = col(a_.column);
        for (const auto& key : matched_keys()) {
            check_guards(rows().at(key));
            const Value& cur = rows().at(key)[static_cast<size_t>(idx)];
            Value::Array arr = cur.is_array() ? cur.as_array() : Value::Array{};
            if (append) {
                int pos = sorted_pos(arr, a_.element);
                if (pos < 0)
                    ctx_.fail("element already present in " + where_ + "." + a_.column + ": " +
                              a_.element.canonical());
                arr.insert(arr.begin() + pos, a_.element);
            } else {
                auto it = std::find(arr.begin(), arr.end(), a_.element);
                if (it == arr.end())
                    ctx_.fail("element not present in " + where_ + "." + a_.column + ": " +
                              a_.element.canonical());
                arr.erase(it);
            }
            cell_edit(key, idx, Value{std::move(arr)});
        }
    }

    void nested_insert() {
        int idx = col(a_.column);
        if (!a_.element.is_composite())
            ctx_.fail("nested insert into " + where_ + "." + a_.column + " needs a composite");
        for (const auto& key : matched_keys()) {
            const Value& cur = rows().at(key)[static_cast<size_t>(idx)];
            Value::Array arr = cur.is_array() ? cur.as_array() : Value::Array{};
            for (const auto& e : arr) {
                bool same = true;
                for (const auto& f : a_.element_key) {
                    auto lhs = e.as_composite().find(f);
                    auto rhs = a_.element.as_composite().find(f);
                    if (lhs == e.as_composite().end() || rhs == a_.element.as_composite().end() ||
                        !(lhs->second == rhs->second))
                        same = false;
                }
                if (same && !a_.element_key.empty())
                    ctx_.fail("duplicate nested element in " + where_ + "." + a_.column);
            }
            int pos = sorted_pos(arr, a_.element);
            arr.insert(arr.begin() + (pos < 0 ? static_cast<int>(arr.size()) : pos), a_.element);
            cell_edit(key, idx, Value{std::move(arr)});
        }
    }

    void nested_update() {
        int idx = col(a_.column);
        for (const auto& key : matched_keys()) {
            const Value& cur = rows().at(key)[static_cast<size_t>(idx)];
            if (!cur.is_array()) continue;
            Value::Array arr;
            bool changed = false;
            for (const auto& e : cur.as_array()) {
                bool matches = e.is_composite();
                if (matches)
                    for (const auto& [f, v] : a_.element.as_composite()) {
                        auto it = e.as_composite().find(f);
                        if (it == e.as_composite().end() || !(it->second == v)) matches = false;
                    }
                if (!matches) {
                    arr.push_back(e);
                    continue;
                }
                Value::Composite next = e.as_composite();
                for (const auto& [f, v] : a_.set) next[f] = v;
                arr.push_back(Value{std::move(next)});
                changed = true;
            }
            if (!changed) continue;
            std::sort(arr.begin(), arr.end(),
                      [](const Value& a, const Value& b) { return a.compare(b) < 0; });
            cell_edit(key, idx, Value{std::move(arr)});
        }
    }

    void nested_delete() {
        int idx = col(a_.column);
        for (const auto& key : matched_keys()) {
            const Value& cur = rows().at(key)[static_cast<size_t>(idx)];
            if (!cur.is_array()) continue;
            Value::Array arr;
            for (const auto& e : cur.as_array()) {
                bool matches = e.is_composite();
                if (matches)
                    for (const auto& [f, v] : a_.element.as_composite()) {
                        auto it = e.as_composite().find(f);
                        if (it == e.as_composite().end() || !(it->second == v)) matches = false;
                    }
                if (!matches) arr.push_back(e);
            }
            if (arr.size() != cur.as_array().size()) cell_edit(key, idx, Value{std::move(arr)});
        }
    }

    std::string key_tuple_text(const Row& row) {
        std::string out = "(";
        bool first = true;
        for (int k : keys()) {
            if (!first) out += ", ";
            out += row[static_cast<size_t>(k)].canonical();
            first = false;
        }
        return out + ")";
    }
};

} // namespace

void apply_writes(Store& store, const WriteSet& ws) {
    ApplyContext ctx{store, {}};
    try {
        for (const auto& a : ws.actions) ActionRunner(ctx, a).run();
    } catch (...) {
        for (auto it = ctx.undo.rbegin(); it != ctx.undo.rend(); ++it) (*it)();
        throw;
    }
}

} // namespace erdb
