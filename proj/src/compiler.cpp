#include "erdb/compiler.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "erdb/er_graph.hpp"
#include "erdb/erql/binder.hpp"

namespace erdb {

using erql::CrudStatement;
using erql::Expr;
using erql::FromJoin;
using erql::LogicalQuery;
using erql::Path;
using erql::Predicate;
using erql::SelectItem;

namespace {

std::string dotted(const std::vector<std::string>& parts, size_t from = 0) {
    std::string out;
    for (size_t i = from; i < parts.size(); ++i) {
        if (i > from) out += ".";
        out += parts[i];
    }
    return out;
}

std::string expr_text(const Expr& e) {
    if (e.kind == Expr::Kind::Unnest) return "unnest(" + e.path.text() + ")";
    if (e.kind == Expr::Kind::Aggregate) return e.agg_fn + "(" + e.path.text() + ")";
    return e.path.text();
}

} // namespace

std::vector<std::string> infer_groupby(const LogicalQuery& query) {
    bool has_agg = false, has_nested = false;
    for (const auto& item : query.select) {
        if (item.kind == SelectItem::Kind::Nested) has_nested = true;
        if (item.kind == SelectItem::Kind::Expr && item.expr.kind == Expr::Kind::Aggregate)
            has_agg = true;
    }
    if (!has_agg && !has_nested) return {};

    std::vector<std::string> keys;
    for (const auto& item : query.select) {
        switch (item.kind) {
        case SelectItem::Kind::Nested:
            break;
        case SelectItem::Kind::Star:
            for (const auto& attr : item.star_attrs)
                keys.push_back(item.star_binder + "." + attr);
            break;
        case SelectItem::Kind::Expr: {
            const Expr& e = item.expr;
            if (e.kind == Expr::Kind::Aggregate) break;
            if (has_agg && e.kind == Expr::Kind::PathRef && e.path.bound &&
                e.path.bound->type.is_array())
                throw Error("multi-valued path '" + e.path.text() +
                            "' cannot be grouped alongside aggregates; wrap it in unnest(" +
                            e.path.text() + ")");
            keys.push_back(expr_text(e));
            break;
        }
        }
    }
    return keys;
}

// ---------------------------------------------------------------------------
// query compilation
// ---------------------------------------------------------------------------

namespace {

/// A plan under construction together with the name → column-index map of
/// every logical slot it exposes.
struct Slotted {
    PlanNode node;
    std::map<std::string, int> slots;

    int width() const { return static_cast<int>(node.columns.size()); }
};

const std::vector<Column>& frag_section_columns(const Fragment& frag, Section s) {
    switch (s) {
    case Section::Whole: return frag.columns;
    case Section::Left: return frag.left_columns;
    case Section::Right: return frag.right_columns;
    case Section::Edges: return frag.edge_columns;
    }
    return frag.columns;
}

/// One leaf-level column requirement of a binder: the full attribute path
/// (composites expanded into their leaves; multi-valued attributes stop at
/// the array itself).
struct ColNeed {
    std::vector<std::string> parts;
    std::string declaring;
    std::string node;
    TypeDesc type;
    bool is_mv = false;

    bool operator<(const ColNeed& o) const { return node < o.node; }
};

void expand_leaves(const std::string& declaring, const AttributeDef& attr,
                   std::vector<std::string>& path, std::set<ColNeed>& out) {
    if (attr.is_multi()) {
        out.insert({path, declaring, attribute_node_id(declaring, path), attr.type(), true});
        return;
    }
    if (attr.is_composite()) {
        for (const auto& c : attr.children) {
            path.push_back(c.name);
            expand_leaves(declaring, c, path, out);
            path.pop_back();
        }
        return;
    }
    out.insert({path, declaring, attribute_node_id(declaring, path), attr.type(), false});
}

struct BinderNeeds {
    std::set<ColNeed> cols;
    bool closure = false;              // key-closure slots must exist
    std::set<std::string> fk_rels;     // folded fks hosted on this binder's rows
    std::set<std::string> embed_cols;  // embedded weak arrays (entity names)
};

/// How one FROM join is realized against the mapping.
struct JoinStep {
    enum class How {
        Pred,           // equality-predicate join
        WeakUnnest,     // far = weak embedded in near's rows: unnest the array
        WeakOwnerAlias, // far = owner of weak near: closure is a prefix alias
        WeakJoin,       // far = standalone weak: join on owner-closure prefix
        FkAlias,        // far = one side of a folded fk on near's rows
        FkJoin,         // far = many side: join its rows on fk = near closure
        RelRows,        // relationship fragment: one join, far keys aliased
        FactorMerged,   // base + first join: one edge-driven combined scan
        FactorJoin      // edge-driven scan of far's side joined on near keys
    };

    How how = How::Pred;
    const FromJoin* join = nullptr;
    std::string near, far; // binder names; near is already planned
    const RelationshipDef* rel = nullptr;
    std::string near_role, far_role;
    const Fragment* frag = nullptr;       // RelRows / Factor* / WeakUnnest host
    const EmbeddedEntity* emb = nullptr;  // WeakUnnest
    const FoldedFk* fk = nullptr;         // FkAlias / FkJoin
};

/// Where a binder's rows come from.
struct MemberSource {
    enum class Kind { Scan, FilterScan, Union, Group, Embedded };
    Kind kind = Kind::Scan;
    const Fragment* fragment = nullptr;       // Scan/FilterScan/Group/Embedded host
    Section section = Section::Whole;         // Group: Left or Right
    std::vector<const Fragment*> branches;    // Union, in subtree order
    std::vector<std::string> filter_classes;  // FilterScan
    const EmbeddedEntity* emb = nullptr;      // Embedded
};

class QueryCompiler {
public:
    QueryCompiler(const ErSchema& schema, const Mapping& mapping, const LogicalQuery& query)
        : schema_(schema), mapping_(mapping), q_(query) {}

    PlanNode run() {
        if (!q_.bound) throw Error("compile_query requires a bound query");
        for (const auto& [b, e] : q_.binders()) cls_[b] = e;
        collect_needs();
        resolve_joins();
        assemble();
        where_filter();
        unnest_items();
        shape_output();
        return std::move(cur_.node);
    }

private:
    const ErSchema& schema_;
    const Mapping& mapping_;
    const LogicalQuery& q_;

    std::map<std::string, std::string> cls_;
    std::map<std::string, BinderNeeds> needs_;
    std::vector<JoinStep> steps_;
    // weak-embedded binder → owner binder aliased onto the same host scan
    std::map<std::string, std::string> owner_alias_;
    Slotted cur_;

    // ---- phase A: slot needs --------------------------------------------

    void need_path(const Path& p) {
        Path::Bound b = p.bound ? *p.bound : erql::resolve_path(schema_, cls_.at(p.binder), p);
        const AttributeDef* attr = schema_.find_attribute(b.entity, p.parts[0]);
        if (!attr) throw Error("internal: bound path lost its attribute");
        std::vector<std::string> walk{p.parts[0]};
        const AttributeDef* cur = attr;
        for (size_t i = 1; i < p.parts.size(); ++i) {
            for (const auto& c : cur->children)
                if (c.name == p.parts[i]) cur = &c;
            walk.push_back(p.parts[i]);
        }
        expand_leaves(b.declaring_entity, *cur, walk, needs_[p.binder].cols);
    }

    void need_item(const SelectItem& item) {
        switch (item.kind) {
        case SelectItem::Kind::Star:
            for (const auto& attr : item.star_attrs) {
                Path p;
                p.binder = item.star_binder;
                p.parts = {attr};
                need_path(p);
            }
            break;
        case SelectItem::Kind::Expr:
            need_path(item.expr.path);
            break;
        case SelectItem::Kind::Nested:
            for (const auto& sub : item.items) {
                if (sub.kind != SelectItem::Kind::Expr ||
                    sub.expr.kind != Expr::Kind::PathRef)
                    throw Error("nested select lists support plain attribute paths only");
                need_path(sub.expr.path);
            }
            break;
        }
    }

    void need_pred(const Predicate& p) {
        switch (p.kind) {
        case Predicate::Kind::Compare:
            if (p.lhs.kind == Predicate::Operand::Kind::PathRef) need_path(p.lhs.path);
            if (p.rhs.kind == Predicate::Operand::Kind::PathRef) need_path(p.rhs.path);
            break;
        case Predicate::Kind::In:
            need_path(p.lhs.path);
            break;
        default:
            for (const auto& c : p.children) need_pred(c);
        }
    }

    void collect_needs() {
        for (const auto& [b, e] : cls_) needs_[b]; // ensure entries
        for (const auto& item : q_.select) need_item(item);
        if (q_.where) need_pred(*q_.where);
        for (const auto& j : q_.joins)
            if (j.on_pred) need_pred(*j.on_pred);
    }

    // ---- phase B: join resolution ---------------------------------------

    const Fragment* find_rel_fragment(const std::string& rel, Fragment::Kind kind) const {
        for (const auto& f : mapping_.fragments) {
            if (f.kind != kind) continue;
            if (kind == Fragment::Kind::RelationshipRows && f.relationship == rel) return &f;
            if (kind == Fragment::Kind::FactorizedRows && f.factorized.relationship == rel)
                return &f;
        }
        return nullptr;
    }

    const FoldedFk* find_folded_fk(const std::string& rel) const {
        for (const auto& f : mapping_.fragments)
            for (const auto& fk : f.folded_fks)
                if (fk.relationship == rel) return &fk;
        return nullptr;
    }

    std::pair<const Fragment*, const EmbeddedEntity*> find_embedded(
        const std::string& entity) const {
        for (const auto& f : mapping_.fragments)
            for (const auto& e : f.nesting.embedded)
                if (e.entity == entity) return {&f, &e};
        return {nullptr, nullptr};
    }

    void resolve_joins() {
        for (size_t ji = 0; ji < q_.joins.size(); ++ji) {
            const FromJoin& j = q_.joins[ji];
            JoinStep s;
            s.join = &j;
            s.far = j.binder;
            if (!j.resolved) throw Error("compile_query requires a bound query");
            s.near = j.resolved->left_binder;
            if (!j.via_relationship) {
                s.how = JoinStep::How::Pred;
                steps_.push_back(s);
                continue;
            }
            s.rel = &schema_.relationship(j.relationship);
            s.near_role = j.resolved->left_role;
            s.far_role = j.resolved->right_role;

            // identifying relationship of a weak entity?
            std::string weak_side;
            for (const auto& p : s.rel->participants) {
                const auto& owner = schema_.entity(p.entity).weak_owner;
                if (owner && owner->identifying_relationship == s.rel->name)
                    weak_side = p.entity;
            }
            if (!weak_side.empty()) {
                if (cls_.at(s.far) == weak_side) {
                    auto [host, emb] = find_embedded(weak_side);
                    if (emb) {
                        s.how = JoinStep::How::WeakUnnest;
                        s.frag = host;
                        s.emb = emb;
                        needs_[s.near].closure = true;
                        needs_[s.near].embed_cols.insert(weak_side);
                    } else {
                        s.how = JoinStep::How::WeakJoin;
                        needs_[s.near].closure = true;
                        needs_[s.far].closure = true;
                    }
                } else {
                    s.how = JoinStep::How::WeakOwnerAlias;
                    needs_[s.near].closure = true;
                    if (find_embedded(cls_.at(s.near)).second)
                        owner_alias_[s.near] = s.far;
                }
                steps_.push_back(s);
                continue;
            }

            if (const Fragment* ff = find_rel_fragment(s.rel->name,
                                                       Fragment::Kind::FactorizedRows)) {
                s.frag = ff;
                bool mergeable = ji == 0 && s.near == q_.base_binder &&
                                 owner_alias_.count(s.near) == 0;
                s.how = mergeable ? JoinStep::How::FactorMerged : JoinStep::How::FactorJoin;
                needs_[s.near].closure = true;
                needs_[s.far].closure = true;
                steps_.push_back(s);
                continue;
            }
            if (const Fragment* rf = find_rel_fragment(s.rel->name,
                                                       Fragment::Kind::RelationshipRows)) {
                s.frag = rf;
                s.how = JoinStep::How::RelRows;
                needs_[s.near].closure = true;
                steps_.push_back(s);
                continue;
            }
            if (const FoldedFk* fk = find_folded_fk(s.rel->name)) {
                s.fk = fk;
                bool far_is_host = s.far_role == fk->host_role;
                if (far_is_host) {
                    s.how = JoinStep::How::FkJoin;
                    needs_[s.near].closure = true;
                    needs_[s.far].fk_rels.insert(s.rel->name);
                } else {
                    s.how = JoinStep::How::FkAlias;
                    needs_[s.near].fk_rels.insert(s.rel->name);
                }
                steps_.push_back(s);
                continue;
            }
            throw Error("mapping stores relationship '" + s.rel->name +
                        "' nowhere; cannot join via it");
        }
    }

    // ---- membership & column hosting ------------------------------------

    static bool hosts_instances_of(const ErSchema& schema, const std::string& anchor, bool exact,
                                   const std::string& cls) {
        if (exact)
            return anchor == cls && schema.subtree_of(cls).size() == 1;
        return schema.is_subclass_of(cls, anchor); // anchor is ancestor-or-self
    }

    /// Row sources hosting every instance of `cls`, as (fragment, section,
    /// anchor); deeper anchors are more specific.
    std::vector<std::tuple<const Fragment*, Section, std::string>> complete_sources(
        const std::string& cls) const {
        std::vector<std::tuple<const Fragment*, Section, std::string>> out;
        for (const auto& f : mapping_.fragments) {
            if (f.kind == Fragment::Kind::EntityRows) {
                if (hosts_instances_of(schema_, f.anchor, f.exact, cls))
                    out.emplace_back(&f, Section::Whole, f.anchor);
            } else if (f.kind == Fragment::Kind::FactorizedRows) {
                if (schema_.is_subclass_of(cls, f.factorized.left))
                    out.emplace_back(&f, Section::Left, f.factorized.left);
                if (schema_.is_subclass_of(cls, f.factorized.right))
                    out.emplace_back(&f, Section::Right, f.factorized.right);
            }
        }
        std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
            size_t da = schema_.chain_of(std::get<2>(a)).size();
            size_t db = schema_.chain_of(std::get<2>(b)).size();
            if (da != db) return da > db; // deepest anchor first
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<0>(a)->name < std::get<0>(b)->name;
        });
        return out;
    }

    MemberSource member_source(const std::string& cls) const {
        auto sources = complete_sources(cls);
        if (!sources.empty()) {
            auto [frag, section, anchor] = sources.front();
            MemberSource m;
            m.fragment = frag;
            m.section = section;
            if (section != Section::Whole)
                m.kind = MemberSource::Kind::Group;
            else
                m.kind = MemberSource::Kind::Scan;
            if (anchor != cls) {
                const std::vector<Column>& cols = frag_section_columns(*frag, section);
                bool typed = std::any_of(cols.begin(), cols.end(),
                                         [](const Column& c) { return c.name == "type"; });
                if (!typed)
                    throw Error("fragment '" + frag->name +
                                "' hosts several classes without a discriminator; cannot scan '" +
                                cls + "'");
                m.kind = MemberSource::Kind::FilterScan;
                m.filter_classes = schema_.subtree_of(cls);
            }
            return m;
        }
        // union of per-class exact fragments
        MemberSource m;
        m.kind = MemberSource::Kind::Union;
        for (const auto& sub : schema_.subtree_of(cls)) {
            const Fragment* found = nullptr;
            for (const auto& f : mapping_.fragments)
                if (f.kind == Fragment::Kind::EntityRows && f.exact && f.anchor == sub)
                    found = &f;
            if (!found) {
                auto [host, emb] = find_embedded(cls);
                if (emb) {
                    MemberSource e;
                    e.kind = MemberSource::Kind::Embedded;
                    e.fragment = host;
                    e.emb = emb;
                    return e;
                }
                throw Error("mapping provides no complete row source for entity '" + cls + "'");
            }
            m.branches.push_back(found);
        }
        return m;
    }

    const Column* col_by_node(const Fragment& frag, Section section,
                              const std::string& node) const {
        for (const auto& c : frag_section_columns(frag, section))
            if (c.node == node) return &c;
        return nullptr;
    }

    /// Host of one leaf column for instances of `cls`: the membership source
    /// itself, a joined ancestor fragment, a union of exact fragments, or an
    /// exploded multi-value fragment.
    struct ColHost {
        enum class Kind { Member, FragJoin, UnionJoin, MvJoin } kind = Kind::Member;
        const Fragment* fragment = nullptr;
        Section section = Section::Whole;
    };

    ColHost host_of(const std::string& cls, const MemberSource& mem, const ColNeed& need) const {
        // resident in the membership source?
        if (mem.kind == MemberSource::Kind::Union) {
            if (col_by_node(*mem.branches.front(), Section::Whole, need.node))
                return {ColHost::Kind::Member, nullptr, Section::Whole};
        } else if (mem.kind == MemberSource::Kind::Embedded) {
            // element fields carry every attribute of the embedded entity
            return {ColHost::Kind::Member, nullptr, Section::Whole};
        } else if (col_by_node(*mem.fragment, mem.section, need.node)) {
            return {ColHost::Kind::Member, mem.fragment, mem.section};
        }
        for (const auto& [frag, section, anchor] : complete_sources(cls))
            if (col_by_node(*frag, section, need.node))
                return {ColHost::Kind::FragJoin, frag, section};
        if (need.is_mv) {
            for (const auto& f : mapping_.fragments)
                if (f.kind == Fragment::Kind::MultiValueRows && f.mv_node == need.node)
                    return {ColHost::Kind::MvJoin, &f, Section::Whole};
        }
        // exact fragments all carry the full chain's columns
        bool in_exacts = true;
        std::vector<const Fragment*> exacts;
        for (const auto& sub : schema_.subtree_of(cls)) {
            const Fragment* found = nullptr;
            for (const auto& f : mapping_.fragments)
                if (f.kind == Fragment::Kind::EntityRows && f.exact && f.anchor == sub &&
                    col_by_node(f, Section::Whole, need.node))
                    found = &f;
            if (!found) in_exacts = false;
        }
        if (in_exacts && !schema_.subtree_of(cls).empty())
            return {ColHost::Kind::UnionJoin, nullptr, Section::Whole};
        throw Error("mapping stores no column for '" + need.declaring + "." +
                    dotted(need.parts) + "'");
    }

    // ---- plan-building primitives ----------------------------------------

    static void append_columns(PlanNode& node, const std::vector<PlanColumn>& cols) {
        node.columns.insert(node.columns.end(), cols.begin(), cols.end());
    }

    /// A physical column requested under several names is scanned once; the
    /// extra names become aliases of the first output slot.
    Slotted make_scan(const Fragment& frag,
                      const std::vector<std::tuple<Section, int, std::string>>& cols) const {
        Slotted s;
        s.node.op = PlanNode::Op::Scan;
        s.node.fragment = frag.name;
        std::map<std::pair<Section, int>, int> seen;
        for (const auto& [section, idx, name] : cols) {
            auto it = seen.find({section, idx});
            if (it != seen.end()) {
                s.slots[name] = it->second;
                continue;
            }
            s.node.scan_columns.push_back({section, idx, name});
            const Column& c = frag_section_columns(frag, section)[static_cast<size_t>(idx)];
            s.node.columns.push_back({name, c.type});
            s.slots[name] = s.width() - 1;
            seen[{section, idx}] = s.width() - 1;
        }
        return s;
    }

    static Slotted join(Slotted left, Slotted right, PlanNode::JoinKind kind,
                        const std::vector<std::pair<int, int>>& keys,
                        const std::vector<int>& coalesce = {}) {
        Slotted out;
        out.node.op = PlanNode::Op::Join;
        out.node.join_kind = kind;
        out.node.join_keys = keys;
        out.node.columns = left.node.columns;
        append_columns(out.node, right.node.columns);
        int off = left.width();
        out.slots = std::move(left.slots);
        for (const auto& [name, idx] : right.slots) out.slots[name] = idx + off;
        for (int c : coalesce) out.node.coalesce_empty_arrays.push_back(c + off);
        out.node.children.push_back(std::move(left.node));
        out.node.children.push_back(std::move(right.node));
        return out;
    }

    static Slotted filter(Slotted in, PlanPredicate pred) {
        Slotted out;
        out.node.op = PlanNode::Op::Filter;
        out.node.predicate = std::move(pred);
        out.node.columns = in.node.columns;
        out.slots = std::move(in.slots);
        out.node.children.push_back(std::move(in.node));
        return out;
    }

    /// Unnest helper shared with the engine's column layout: appends the
    /// whole-element column and flattened leaf columns.
    static Slotted unnest(Slotted in, int col, bool outer) {
        Slotted out;
        out.node.op = PlanNode::Op::Unnest;
        out.node.unnest_column = col;
        out.node.unnest_outer = outer;
        out.node.columns = unnest_output_columns(in.node.columns, col);
        out.slots = std::move(in.slots);
        for (size_t i = in.node.columns.size(); i < out.node.columns.size(); ++i)
            out.slots[out.node.columns[i].name] = static_cast<int>(i);
        out.node.children.push_back(std::move(in.node));
        return out;
    }

    static PlanPredicate eq_pred(int col, Value literal) {
        PlanPredicate p;
        p.kind = PlanPredicate::Kind::Compare;
        p.op = PlanPredicate::CmpOp::Eq;
        p.lhs.column = col;
        p.rhs.literal = std::move(literal);
        return p;
    }

    static PlanPredicate conj(std::vector<PlanPredicate> preds) {
        if (preds.size() == 1) return std::move(preds.front());
        PlanPredicate p;
        p.kind = PlanPredicate::Kind::And;
        p.children = std::move(preds);
        return p;
    }

    // ---- binder construction ---------------------------------------------

    std::string slot_closure(const std::string& binder, size_t i) const {
        return binder + ".#k" + std::to_string(i);
    }
    std::string slot_path(const std::string& binder, const std::vector<std::string>& parts) const {
        return binder + "." + dotted(parts);
    }
    std::string slot_fk(const std::string& binder, const std::string& rel,
                        const std::string& role, size_t i) const {
        return binder + ".#fk." + rel + "." + role + "." + std::to_string(i);
    }
    std::string slot_embed(const std::string& binder, const std::string& entity) const {
        return binder + ".#emb." + entity;
    }

    /// Splits a binder's needs into membership-resident columns and
    /// attachments, then builds the membership subplan with exactly the
    /// resident columns. `attach_later` receives the rest.
    struct BinderBuild {
        MemberSource mem;
        std::vector<std::pair<ColNeed, ColHost>> attached;
        bool need_closure = false;
    };

    BinderBuild plan_binder(const std::string& binder) const {
        const std::string& cls = cls_.at(binder);
        BinderBuild bb;
        bb.mem = member_source(cls);
        const BinderNeeds& n = needs_.at(binder);
        bb.need_closure = n.closure;
        for (const auto& need : n.cols) {
            ColHost h = host_of(cls, bb.mem, need);
            if (h.kind != ColHost::Kind::Member) {
                bb.attached.emplace_back(need, h);
                bb.need_closure = true;
            }
        }
        return bb;
    }

    /// Builds the membership subplan of a binder: scan / filtered scan /
    /// union / group-section scan, with closure, fk, embedded-array and
    /// resident attribute slots.
    Slotted build_membership(const std::string& binder, const BinderBuild& bb) const {
        const std::string& cls = cls_.at(binder);
        const BinderNeeds& n = needs_.at(binder);
        auto closure = key_closure(schema_, cls);

        if (bb.mem.kind == MemberSource::Kind::Embedded)
            return build_embedded_membership(binder, bb);

        // logical column list (name, resolver) applied to one fragment
        struct Wanted {
            std::string slot;
            std::string col_name; // by-name lookup (closure, fk, type, embedded)
            std::string node;     // by-node lookup (attributes)
        };
        std::vector<Wanted> wanted;
        if (bb.need_closure)
            for (size_t i = 0; i < closure.size(); ++i)
                wanted.push_back({slot_closure(binder, i),
                                  closure[i].entity + "_" + closure[i].attribute, ""});
        bool filtered = bb.mem.kind == MemberSource::Kind::FilterScan;
        if (filtered) wanted.push_back({binder + ".#type", "type", ""});
        for (const auto& need : n.cols) {
            ColHost h = host_of(cls, bb.mem, need);
            if (h.kind == ColHost::Kind::Member)
                wanted.push_back({slot_path(binder, need.parts), "", need.node});
        }
        for (const auto& rel : n.fk_rels) {
            const FoldedFk* fk = find_folded_fk(rel);
            const RelationshipDef& r = schema_.relationship(rel);
            std::string fk_entity;
            for (const auto& p : r.participants)
                if (p.role == fk->fk_role) fk_entity = p.entity;
            auto fk_closure = key_closure(schema_, fk_entity);
            for (size_t i = 0; i < fk_closure.size(); ++i)
                wanted.push_back({slot_fk(binder, rel, fk->fk_role, i),
                                  fk->fk_role + "_" + fk_closure[i].attribute, ""});
        }
        for (const auto& weak : n.embed_cols) {
            auto [host, emb] = find_embedded(weak);
            if (emb) wanted.push_back({slot_embed(binder, weak), emb->column, ""});
        }

        auto scan_of = [&](const Fragment& frag, Section section) {
            std::vector<std::tuple<Section, int, std::string>> cols;
            const std::vector<Column>& fc = frag_section_columns(frag, section);
            for (const auto& w : wanted) {
                int idx = -1;
                for (size_t i = 0; i < fc.size(); ++i) {
                    if (!w.col_name.empty() ? fc[i].name == w.col_name : fc[i].node == w.node)
                        idx = static_cast<int>(i);
                    if (idx >= 0) break;
                }
                if (idx < 0)
                    throw Error("fragment '" + frag.name + "' lacks a column for slot '" +
                                w.slot + "'");
                cols.emplace_back(section, idx, w.slot);
            }
            return make_scan(frag, cols);
        };

        if (bb.mem.kind == MemberSource::Kind::Union) {
            Slotted out;
            out.node.op = PlanNode::Op::UnionAll;
            for (const Fragment* f : bb.mem.branches) {
                Slotted branch = scan_of(*f, Section::Whole);
                if (out.node.children.empty()) {
                    out.node.columns = branch.node.columns;
                    out.slots = branch.slots;
                }
                out.node.children.push_back(std::move(branch.node));
            }
            return out;
        }

        Slotted s = scan_of(*bb.mem.fragment, bb.mem.section);
        if (filtered) {
            int tcol = s.slots.at(binder + ".#type");
            if (bb.mem.filter_classes.size() == 1) {
                s = filter(std::move(s), eq_pred(tcol, Value{bb.mem.filter_classes.front()}));
            } else {
                PlanPredicate p;
                p.kind = PlanPredicate::Kind::In;
                p.lhs.column = tcol;
                for (const auto& c : bb.mem.filter_classes) p.in_list.emplace_back(c);
                s = filter(std::move(s), std::move(p));
            }
        }
        return s;
    }

    /// Weak entity embedded in its owner: scan the host fragment (owner
    /// closure + array) and unnest. When a later join aliases the owner
    /// binder onto this scan, its slots are added here too.
    Slotted build_embedded_membership(const std::string& binder, const BinderBuild& bb) const {
        const std::string& cls = cls_.at(binder);
        const Fragment& host = *bb.mem.fragment;
        const EmbeddedEntity& emb = *bb.mem.emb;
        const std::string owner = schema_.entity(cls).weak_owner->owner;
        auto oc = key_closure(schema_, owner);

        std::vector<std::tuple<Section, int, std::string>> cols;
        auto col_index_by_name = [&](const std::string& name) {
            const auto& fc = host.columns;
            for (size_t i = 0; i < fc.size(); ++i)
                if (fc[i].name == name) return static_cast<int>(i);
            throw Error("fragment '" + host.name + "' lacks column '" + name + "'");
        };
        for (size_t i = 0; i < oc.size(); ++i)
            cols.emplace_back(Section::Whole, col_index_by_name(oc[i].entity + "_" + oc[i].attribute),
                              slot_closure(binder, i));
        int arr_idx = col_index_by_name(emb.column);
        std::string arr_slot = slot_embed(binder, cls);
        cols.emplace_back(Section::Whole, arr_idx, arr_slot);

        // owner binder aliased onto this scan: its resident columns ride along
        auto alias_it = owner_alias_.find(binder);
        std::vector<std::pair<std::string, const ColNeed*>> owner_resident;
        if (alias_it != owner_alias_.end()) {
            const std::string& ob = alias_it->second;
            for (const auto& need : needs_.at(ob).cols) {
                const Column* c = col_by_node(host, Section::Whole, need.node);
                if (c)
                    cols.emplace_back(Section::Whole,
                                      static_cast<int>(c - host.columns.data()),
                                      slot_path(ob, need.parts));
            }
        }

        Slotted s = make_scan(host, cols);
        s = unnest(std::move(s), s.slots.at(arr_slot), false);

        // element fields: closure discriminators + attributes
        auto wc = key_closure(schema_, cls);
        for (size_t i = oc.size(); i < wc.size(); ++i) {
            std::string field = arr_slot + "." + wc[i].attribute;
            s.slots[slot_closure(binder, i)] = s.slots.at(field);
        }
        for (const auto& need : needs_.at(binder).cols) {
            std::string field = arr_slot + "." + dotted(need.parts);
            auto it = s.slots.find(field);
            if (it != s.slots.end()) s.slots[slot_path(binder, need.parts)] = it->second;
        }
        return s;
    }

    /// Attaches non-resident columns of `binder` onto `cur_`: ancestor /
    /// union joins on the key closure, and exploded multi-value fragments as
    /// left joins against group_nest subplans.
    void attach(const std::string& binder, const BinderBuild& bb) {
        const std::string& cls = cls_.at(binder);
        auto closure = key_closure(schema_, cls);

        // a need that IS a key-closure attribute reuses the closure slot
        for (const auto& [need, host] : bb.attached) {
            for (size_t i = 0; i < closure.size(); ++i) {
                if (need.node != attribute_node_id(closure[i].entity, {closure[i].attribute}))
                    continue;
                auto it = cur_.slots.find(slot_closure(binder, i));
                if (it != cur_.slots.end())
                    cur_.slots[slot_path(binder, need.parts)] = it->second;
            }
        }

        // group attachments by (fragment, section); unions together
        std::map<std::pair<std::string, Section>, std::vector<ColNeed>> frag_groups;
        std::vector<ColNeed> union_group, mv_group;
        for (const auto& [need, host] : bb.attached) {
            if (cur_.slots.count(slot_path(binder, need.parts))) continue;
            switch (host.kind) {
            case ColHost::Kind::Member: break;
            case ColHost::Kind::FragJoin:
                frag_groups[{host.fragment->name, host.section}].push_back(need);
                break;
            case ColHost::Kind::UnionJoin: union_group.push_back(need); break;
            case ColHost::Kind::MvJoin: mv_group.push_back(need); break;
            }
        }

        auto closure_key_pairs = [&](const Slotted& right) {
            std::vector<std::pair<int, int>> keys;
            for (size_t i = 0; i < closure.size(); ++i)
                keys.emplace_back(cur_.slots.at(slot_closure(binder, i)),
                                  right.slots.at(slot_closure(binder, i)));
            return keys;
        };

        // deterministic order: anchor depth ascending, then fragment name
        std::vector<std::pair<std::pair<std::string, Section>, std::vector<ColNeed>>> ordered(
            frag_groups.begin(), frag_groups.end());
        std::stable_sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
            const Fragment* fa = mapping_.find_fragment(a.first.first);
            const Fragment* fb = mapping_.find_fragment(b.first.first);
            std::string aa = fa->kind == Fragment::Kind::FactorizedRows
                                 ? (a.first.second == Section::Left ? fa->factorized.left
                                                                    : fa->factorized.right)
                                 : fa->anchor;
            std::string ab = fb->kind == Fragment::Kind::FactorizedRows
                                 ? (b.first.second == Section::Left ? fb->factorized.left
                                                                    : fb->factorized.right)
                                 : fb->anchor;
            size_t da = schema_.chain_of(aa).size(), db = schema_.chain_of(ab).size();
            if (da != db) return da < db;
            return a.first.first < b.first.first;
        });

        for (const auto& [key, group] : ordered) {
            const Fragment& frag = *mapping_.find_fragment(key.first);
            std::vector<std::tuple<Section, int, std::string>> cols;
            const auto& fc = frag_section_columns(frag, key.second);
            auto idx_by_name = [&](const std::string& name) {
                for (size_t i = 0; i < fc.size(); ++i)
                    if (fc[i].name == name) return static_cast<int>(i);
                throw Error("fragment '" + frag.name + "' lacks column '" + name + "'");
            };
            for (size_t i = 0; i < closure.size(); ++i)
                cols.emplace_back(key.second,
                                  idx_by_name(closure[i].entity + "_" + closure[i].attribute),
                                  slot_closure(binder, i));
            for (const auto& need : group) {
                const Column* c = col_by_node(frag, key.second, need.node);
                cols.emplace_back(key.second, static_cast<int>(c - fc.data()),
                                  slot_path(binder, need.parts));
            }
            Slotted right = make_scan(frag, cols);
            auto keys = closure_key_pairs(right);
            // the right side's closure slots would collide; drop them
            for (size_t i = 0; i < closure.size(); ++i) right.slots.erase(slot_closure(binder, i));
            cur_ = join(std::move(cur_), std::move(right), PlanNode::JoinKind::Inner, keys);
        }

        if (!union_group.empty()) {
            Slotted u;
            u.node.op = PlanNode::Op::UnionAll;
            for (const auto& sub : schema_.subtree_of(cls)) {
                const Fragment* f = nullptr;
                for (const auto& frag : mapping_.fragments)
                    if (frag.kind == Fragment::Kind::EntityRows && frag.exact &&
                        frag.anchor == sub)
                        f = &frag;
                std::vector<std::tuple<Section, int, std::string>> cols;
                const auto& fc = f->columns;
                auto idx_by_name = [&](const std::string& name) {
                    for (size_t i = 0; i < fc.size(); ++i)
                        if (fc[i].name == name) return static_cast<int>(i);
                    throw Error("fragment '" + f->name + "' lacks column '" + name + "'");
                };
                for (size_t i = 0; i < closure.size(); ++i)
                    cols.emplace_back(Section::Whole,
                                      idx_by_name(closure[i].entity + "_" + closure[i].attribute),
                                      slot_closure(binder, i));
                for (const auto& need : union_group) {
                    const Column* c = col_by_node(*f, Section::Whole, need.node);
                    cols.emplace_back(Section::Whole, static_cast<int>(c - fc.data()),
                                      slot_path(binder, need.parts));
                }
                Slotted branch = make_scan(*f, cols);
                if (u.node.children.empty()) {
                    u.node.columns = branch.node.columns;
                    u.slots = branch.slots;
                }
                u.node.children.push_back(std::move(branch.node));
            }
            auto keys = closure_key_pairs(u);
            for (size_t i = 0; i < closure.size(); ++i) u.slots.erase(slot_closure(binder, i));
            cur_ = join(std::move(cur_), std::move(u), PlanNode::JoinKind::Inner, keys);
        }

        std::stable_sort(mv_group.begin(), mv_group.end());
        for (const auto& need : mv_group) {
            const Fragment* mf = nullptr;
            for (const auto& f : mapping_.fragments)
                if (f.kind == Fragment::Kind::MultiValueRows && f.mv_node == need.node) mf = &f;
            cur_ = join_exploded_mv(binder, *mf, need, closure_key_pairs);
        }
    }

    /// Left join against group_nest(scan of the exploded fragment): rows
    /// without elements get an empty array.
    template <typename KeyFn>
    Slotted join_exploded_mv(const std::string& binder, const Fragment& mf, const ColNeed& need,
                             KeyFn closure_key_pairs) {
        auto closure = key_closure(schema_, cls_.at(binder));
        std::vector<std::tuple<Section, int, std::string>> cols;
        const auto& fc = mf.columns;
        for (size_t i = 0; i < closure.size(); ++i) {
            std::string name = closure[i].entity + "_" + closure[i].attribute;
            for (size_t c = 0; c < fc.size(); ++c)
                if (fc[c].name == name)
                    cols.emplace_back(Section::Whole, static_cast<int>(c),
                                      slot_closure(binder, i));
        }
        size_t n_closure = cols.size();
        // element columns: everything that is not part of the owner closure
        for (size_t c = 0; c < fc.size(); ++c) {
            bool is_closure = false;
            for (size_t i = 0; i < n_closure; ++i)
                if (std::get<1>(cols[i]) == static_cast<int>(c)) is_closure = true;
            if (!is_closure)
                cols.emplace_back(Section::Whole, static_cast<int>(c), "elem." + fc[c].name);
        }
        Slotted scan = make_scan(mf, cols);

        // group_nest on the closure, packing element columns
        PlanNode g;
        g.op = PlanNode::Op::GroupNest;
        std::string arr_slot = slot_path(binder, need.parts);
        PlanNode::NestSpec nest;
        nest.name = arr_slot;
        std::string mv_prefix = dotted(need.parts);
        for (size_t c = n_closure; c < cols.size(); ++c) {
            const Column& col = fc[static_cast<size_t>(std::get<1>(cols[c]))];
            // field name: the column's path under the multi-valued attribute
            // (empty for a scalar element, whose column is the attribute itself)
            std::string field;
            if (col.node.size() > need.node.size())
                field = col.node.substr(need.node.size() + 1);
            nest.fields.emplace_back(static_cast<int>(c), field);
        }
        for (size_t i = 0; i < n_closure; ++i) g.group_keys.push_back(static_cast<int>(i));
        g.nests.push_back(nest);
        for (size_t i = 0; i < n_closure; ++i) g.columns.push_back(scan.node.columns[i]);
        g.columns.push_back({arr_slot, need.type});
        g.children.push_back(std::move(scan.node));

        Slotted right;
        right.node = std::move(g);
        for (size_t i = 0; i < n_closure; ++i)
            right.slots[slot_closure(binder, i)] = static_cast<int>(i);
        right.slots[arr_slot] = static_cast<int>(n_closure);

        auto keys = closure_key_pairs(right);
        for (size_t i = 0; i < n_closure; ++i) right.slots.erase(slot_closure(binder, i));
        int arr_local = right.slots.at(arr_slot);
        return join(std::move(cur_), std::move(right), PlanNode::JoinKind::LeftOuter, keys,
                    {arr_local});
    }

    // ---- assembly ---------------------------------------------------------

    void assemble() {
        // the base binder; a merged first join replaces it with the combined scan
        if (!steps_.empty() && steps_.front().how == JoinStep::How::FactorMerged) {
            build_factor_merged(steps_.front());
        } else {
            BinderBuild bb = plan_binder(q_.base_binder);
            cur_ = build_membership(q_.base_binder, bb);
            attach(q_.base_binder, bb);
        }

        for (const auto& s : steps_) {
            switch (s.how) {
            case JoinStep::How::FactorMerged:
                break; // already the base plan
            case JoinStep::How::Pred: step_pred(s); break;
            case JoinStep::How::WeakUnnest: step_weak_unnest(s); break;
            case JoinStep::How::WeakOwnerAlias: step_weak_owner(s); break;
            case JoinStep::How::WeakJoin: step_weak_join(s); break;
            case JoinStep::How::FkAlias: step_fk_alias(s); break;
            case JoinStep::How::FkJoin: step_fk_join(s); break;
            case JoinStep::How::RelRows: step_rel_rows(s); break;
            case JoinStep::How::FactorJoin: step_factor_join(s); break;
            }
        }
    }

    /// Attachment for a binder whose key closure was aliased from existing
    /// slots (no membership scan of its own): every needed column joins in
    /// (or is skipped when its slot already rides along).
    void attach_aliased(const std::string& binder) {
        BinderBuild bb = plan_binder(binder);
        auto closure = key_closure(schema_, cls_.at(binder));
        auto is_closure_attr = [&](const ColNeed& need) {
            for (size_t i = 0; i < closure.size(); ++i)
                if (need.node == attribute_node_id(closure[i].entity, {closure[i].attribute}))
                    return true;
            return false;
        };
        if (bb.mem.kind == MemberSource::Kind::Embedded) {
            bool needs_elements = false;
            for (const auto& need : needs_.at(binder).cols)
                if (!is_closure_attr(need)) needs_elements = true;
            if (needs_elements) {
                // non-key attributes live inside the owner's embedded array:
                // rebuild the unnested membership and join it on the full
                // (already aliased) key closure
                join_binder(binder, [&](const Slotted& right) {
                    std::vector<std::pair<int, int>> keys;
                    for (size_t i = 0; i < closure.size(); ++i)
                        keys.emplace_back(cur_.slots.at(slot_closure(binder, i)),
                                          right.slots.at(slot_closure(binder, i)));
                    return keys;
                });
                return;
            }
        }
        for (const auto& need : needs_.at(binder).cols) {
            bool listed = false;
            for (const auto& [n, h] : bb.attached)
                if (n.node == need.node) listed = true;
            if (listed) continue;
            ColHost h = host_of(cls_.at(binder), bb.mem, need);
            if (h.kind == ColHost::Kind::Member) {
                if (bb.mem.kind == MemberSource::Kind::Union)
                    h = ColHost{ColHost::Kind::UnionJoin, nullptr, Section::Whole};
                else if (bb.mem.kind == MemberSource::Kind::Embedded) {
                    // key-closure attribute of the embedded entity: keep it
                    // listed as resident so the attach pre-pass aliases it
                    // from the closure slot and no join is planned for it
                } else {
                    h = ColHost{ColHost::Kind::FragJoin, bb.mem.fragment, bb.mem.section};
                }
            }
            bb.attached.emplace_back(need, h);
        }
        attach(binder, bb);
    }

    /// Builds `binder`'s membership as a subplan and inner joins it onto
    /// cur_ with `key_fn`(right) pairs, then attaches the rest.
    template <typename KeyFn>
    void join_binder(const std::string& binder, KeyFn key_fn) {
        BinderBuild bb = plan_binder(binder);
        bb.need_closure = true;
        Slotted right = build_membership(binder, bb);
        auto keys = key_fn(right);
        cur_ = join(std::move(cur_), std::move(right), PlanNode::JoinKind::Inner, keys);
        attach(binder, bb);
    }

    void step_pred(const JoinStep& s) {
        BinderBuild bb = plan_binder(s.far);
        Slotted right = build_membership(s.far, bb);

        std::vector<std::pair<int, int>> keys;
        std::vector<const Predicate*> todo{&*s.join->on_pred};
        while (!todo.empty()) {
            const Predicate* p = todo.back();
            todo.pop_back();
            if (p->kind == Predicate::Kind::And) {
                for (const auto& c : p->children) todo.push_back(&c);
                continue;
            }
            if (p->kind != Predicate::Kind::Compare || p->op != Predicate::CmpOp::Eq ||
                p->lhs.kind != Predicate::Operand::Kind::PathRef ||
                p->rhs.kind != Predicate::Operand::Kind::PathRef)
                throw Error("join predicates must be conjunctions of path equalities");
            const Path& a = p->lhs.path;
            const Path& b = p->rhs.path;
            const Path& far = a.binder == s.far ? a : b;
            const Path& near = a.binder == s.far ? b : a;
            if (far.binder != s.far || near.binder == s.far)
                throw Error("join predicate must compare the joined binder with an earlier one");
            keys.emplace_back(cur_.slots.at(slot_path(near.binder, near.parts)),
                              right.slots.at(slot_path(s.far, far.parts)));
        }
        cur_ = join(std::move(cur_), std::move(right), PlanNode::JoinKind::Inner, keys);
        attach(s.far, bb);
    }

    void step_weak_unnest(const JoinStep& s) {
        // near owns the weak entity far, embedded as an array on near's rows
        std::string arr_slot = slot_embed(s.near, cls_.at(s.far));
        cur_ = unnest(std::move(cur_), cur_.slots.at(arr_slot), false);
        // far's slots: closure = near closure ++ element discriminators
        auto oc = key_closure(schema_, cls_.at(s.near));
        auto wc = key_closure(schema_, cls_.at(s.far));
        for (size_t i = 0; i < oc.size(); ++i)
            cur_.slots[slot_closure(s.far, i)] = cur_.slots.at(slot_closure(s.near, i));
        for (size_t i = oc.size(); i < wc.size(); ++i)
            cur_.slots[slot_closure(s.far, i)] = cur_.slots.at(arr_slot + "." + wc[i].attribute);
        for (const auto& need : needs_.at(s.far).cols) {
            auto it = cur_.slots.find(arr_slot + "." + dotted(need.parts));
            if (it != cur_.slots.end()) cur_.slots[slot_path(s.far, need.parts)] = it->second;
        }
    }

    void step_weak_owner(const JoinStep& s) {
        // near is weak; far is its owner: closure prefix aliases, then attach
        auto oc = key_closure(schema_, cls_.at(s.far));
        for (size_t i = 0; i < oc.size(); ++i)
            cur_.slots[slot_closure(s.far, i)] = cur_.slots.at(slot_closure(s.near, i));
        attach_aliased(s.far);
    }

    void step_weak_join(const JoinStep& s) {
        // identifying relationship against a standalone weak fragment:
        // equality on the shared owner-closure prefix
        const std::string& weak_b = s.far;
        const std::string& owner_b = s.near;
        auto oc = key_closure(schema_, cls_.at(owner_b));
        join_binder(weak_b, [&](const Slotted& right) {
            std::vector<std::pair<int, int>> keys;
            for (size_t i = 0; i < oc.size(); ++i)
                keys.emplace_back(cur_.slots.at(slot_closure(owner_b, i)),
                                  right.slots.at(slot_closure(weak_b, i)));
            return keys;
        });
    }

    void step_fk_alias(const JoinStep& s) {
        // far is the "one" side; its key closure sits on near's rows
        auto fc = key_closure(schema_, cls_.at(s.far));
        std::vector<PlanPredicate> present;
        for (size_t i = 0; i < fc.size(); ++i) {
            int col = cur_.slots.at(slot_fk(s.near, s.rel->name, s.fk->fk_role, i));
            cur_.slots[slot_closure(s.far, i)] = col;
            PlanPredicate p = eq_pred(col, Value{});
            p.op = PlanPredicate::CmpOp::Ne; // linked rows only
            present.push_back(std::move(p));
        }
        cur_ = filter(std::move(cur_), conj(std::move(present)));
        attach_aliased(s.far);
    }

    void step_fk_join(const JoinStep& s) {
        // far's rows carry the fk; match it against near's closure
        auto nc = key_closure(schema_, cls_.at(s.near));
        join_binder(s.far, [&](const Slotted& right) {
            std::vector<std::pair<int, int>> keys;
            for (size_t i = 0; i < nc.size(); ++i)
                keys.emplace_back(cur_.slots.at(slot_closure(s.near, i)),
                                  right.slots.at(slot_fk(s.far, s.rel->name, s.fk->fk_role, i)));
            return keys;
        });
    }

    void step_rel_rows(const JoinStep& s) {
        // scan the relationship fragment; far keys alias its role columns
        const Fragment& rf = *s.frag;
        auto nc = key_closure(schema_, cls_.at(s.near));
        auto fc = key_closure(schema_, cls_.at(s.far));
        std::vector<std::tuple<Section, int, std::string>> cols;
        auto idx_by_name = [&](const std::string& name) {
            for (size_t i = 0; i < rf.columns.size(); ++i)
                if (rf.columns[i].name == name) return static_cast<int>(i);
            throw Error("fragment '" + rf.name + "' lacks column '" + name + "'");
        };
        for (size_t i = 0; i < nc.size(); ++i)
            cols.emplace_back(Section::Whole, idx_by_name(s.near_role + "_" + nc[i].attribute),
                              "rel.#near" + std::to_string(i));
        for (size_t i = 0; i < fc.size(); ++i)
            cols.emplace_back(Section::Whole, idx_by_name(s.far_role + "_" + fc[i].attribute),
                              slot_closure(s.far, i));
        Slotted scan = make_scan(rf, cols);
        std::vector<std::pair<int, int>> keys;
        for (size_t i = 0; i < nc.size(); ++i)
            keys.emplace_back(cur_.slots.at(slot_closure(s.near, i)),
                              scan.slots.at("rel.#near" + std::to_string(i)));
        cur_ = join(std::move(cur_), std::move(scan), PlanNode::JoinKind::Inner, keys);
        attach_aliased(s.far);
    }

    std::pair<Section, std::string> factor_side(const JoinStep& s,
                                                const std::string& binder) const {
        const std::string& cls = cls_.at(binder);
        if (s.frag->factorized.left == cls) return {Section::Left, s.frag->factorized.left};
        return {Section::Right, s.frag->factorized.right};
    }

    /// One edge-driven scan resolving both participants: edge key columns
    /// become both binders' closures; each side's resident attributes come
    /// from its row-group section.
    void build_factor_merged(const JoinStep& s) {
        const Fragment& ff = *s.frag;
        auto [near_sec, near_cls] = factor_side(s, s.near);
        auto [far_sec, far_cls] = factor_side(s, s.far);
        auto nc = key_closure(schema_, near_cls);
        auto fc = key_closure(schema_, far_cls);

        std::vector<std::tuple<Section, int, std::string>> cols;
        auto edge_idx = [&](const std::string& name) {
            for (size_t i = 0; i < ff.edge_columns.size(); ++i)
                if (ff.edge_columns[i].name == name) return static_cast<int>(i);
            throw Error("fragment '" + ff.name + "' lacks edge column '" + name + "'");
        };
        for (size_t i = 0; i < nc.size(); ++i)
            cols.emplace_back(Section::Edges, edge_idx(s.near_role + "_" + nc[i].attribute),
                              slot_closure(s.near, i));
        for (size_t i = 0; i < fc.size(); ++i)
            cols.emplace_back(Section::Edges, edge_idx(s.far_role + "_" + fc[i].attribute),
                              slot_closure(s.far, i));

        BinderBuild nb = plan_binder(s.near);
        BinderBuild fb = plan_binder(s.far);
        auto add_side = [&](const std::string& binder, Section sec, const BinderBuild& bb) {
            for (const auto& need : needs_.at(binder).cols) {
                ColHost h = host_of(cls_.at(binder), bb.mem, need);
                if (h.kind != ColHost::Kind::Member) continue;
                const Column* c = col_by_node(ff, sec, need.node);
                if (!c) continue;
                cols.emplace_back(sec,
                                  static_cast<int>(c - frag_section_columns(ff, sec).data()),
                                  slot_path(binder, need.parts));
            }
            for (const auto& rel : needs_.at(binder).fk_rels) {
                const FoldedFk* fk = find_folded_fk(rel);
                const RelationshipDef& r = schema_.relationship(rel);
                std::string fk_entity;
                for (const auto& p : r.participants)
                    if (p.role == fk->fk_role) fk_entity = p.entity;
                auto fkc = key_closure(schema_, fk_entity);
                const auto& sc = frag_section_columns(ff, sec);
                for (size_t i = 0; i < fkc.size(); ++i) {
                    std::string name = fk->fk_role + "_" + fkc[i].attribute;
                    for (size_t ci = 0; ci < sc.size(); ++ci)
                        if (sc[ci].name == name)
                            cols.emplace_back(sec, static_cast<int>(ci),
                                              slot_fk(binder, rel, fk->fk_role, i));
                }
            }
        };
        add_side(s.near, near_sec, nb);
        add_side(s.far, far_sec, fb);

        cur_ = make_scan(ff, cols);
        attach(s.near, nb);
        attach(s.far, fb);
    }

    void step_factor_join(const JoinStep& s) {
        // combined scan of the adjacency plus far's row-group, joined on
        // near's closure against the edge's near-role columns
        const Fragment& ff = *s.frag;
        auto [far_sec, far_cls] = factor_side(s, s.far);
        auto nc = key_closure(schema_, cls_.at(s.near));
        auto fc = key_closure(schema_, far_cls);

        std::vector<std::tuple<Section, int, std::string>> cols;
        auto edge_idx = [&](const std::string& name) {
            for (size_t i = 0; i < ff.edge_columns.size(); ++i)
                if (ff.edge_columns[i].name == name) return static_cast<int>(i);
            throw Error("fragment '" + ff.name + "' lacks edge column '" + name + "'");
        };
        for (size_t i = 0; i < nc.size(); ++i)
            cols.emplace_back(Section::Edges, edge_idx(s.near_role + "_" + nc[i].attribute),
                              "edge.#near" + std::to_string(i));
        for (size_t i = 0; i < fc.size(); ++i)
            cols.emplace_back(Section::Edges, edge_idx(s.far_role + "_" + fc[i].attribute),
                              slot_closure(s.far, i));
        BinderBuild fb = plan_binder(s.far);
        for (const auto& need : needs_.at(s.far).cols) {
            ColHost h = host_of(cls_.at(s.far), fb.mem, need);
            if (h.kind != ColHost::Kind::Member) continue;
            const Column* c = col_by_node(ff, far_sec, need.node);
            if (!c) continue;
            cols.emplace_back(far_sec,
                              static_cast<int>(c - frag_section_columns(ff, far_sec).data()),
                              slot_path(s.far, need.parts));
        }
        Slotted right = make_scan(ff, cols);
        std::vector<std::pair<int, int>> keys;
        for (size_t i = 0; i < nc.size(); ++i)
            keys.emplace_back(cur_.slots.at(slot_closure(s.near, i)),
                              right.slots.at("edge.#near" + std::to_string(i)));
        cur_ = join(std::move(cur_), std::move(right), PlanNode::JoinKind::Inner, keys);
        attach(s.far, fb);
    }

    // ---- predicates, unnests, shaping ------------------------------------

    int slot_of(const Path& p) {
        auto it = cur_.slots.find(slot_path(p.binder, p.parts));
        if (it == cur_.slots.end())
            throw Error("internal: no slot for path '" + p.text() + "'");
        return it->second;
    }

    PlanPredicate compile_pred(const Predicate& p) {
        PlanPredicate out;
        switch (p.kind) {
        case Predicate::Kind::Compare: {
            out.kind = PlanPredicate::Kind::Compare;
            out.op = static_cast<PlanPredicate::CmpOp>(static_cast<int>(p.op));
            auto operand = [&](const Predicate::Operand& o) {
                PlanPredicate::Operand po;
                if (o.kind == Predicate::Operand::Kind::PathRef) {
                    if (o.path.bound && o.path.bound->type.is_composite())
                        throw Error("cannot compare composite attribute '" + o.path.text() + "'");
                    po.column = slot_of(o.path);
                } else {
                    po.literal = o.literal;
                }
                return po;
            };
            out.lhs = operand(p.lhs);
            out.rhs = operand(p.rhs);
            break;
        }
        case Predicate::Kind::In:
            out.kind = PlanPredicate::Kind::In;
            out.lhs.column = slot_of(p.lhs.path);
            out.in_list = p.in_list;
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
        case Predicate::Kind::Not:
            out.kind = p.kind == Predicate::Kind::And   ? PlanPredicate::Kind::And
                       : p.kind == Predicate::Kind::Or  ? PlanPredicate::Kind::Or
                                                        : PlanPredicate::Kind::Not;
            for (const auto& c : p.children) out.children.push_back(compile_pred(c));
            break;
        }
        return out;
    }

    void where_filter() {
        if (q_.where) cur_ = filter(std::move(cur_), compile_pred(*q_.where));
    }

    std::map<std::string, int> unnest_slots_; // expr text → element column

    void unnest_items() {
        for (const auto& item : q_.select) {
            if (item.kind != SelectItem::Kind::Expr ||
                item.expr.kind != Expr::Kind::Unnest)
                continue;
            int arr = slot_of(item.expr.path);
            std::string arr_name = cur_.node.columns[static_cast<size_t>(arr)].name;
            cur_ = unnest(std::move(cur_), arr, false);
            unnest_slots_[expr_text(item.expr)] = cur_.slots.at(arr_name + ".#elem");
        }
    }

    int expr_slot(const Expr& e) {
        if (e.kind == Expr::Kind::Unnest) return unnest_slots_.at(expr_text(e));
        return slot_of(e.path);
    }

    static TypeDesc agg_type(const std::string& fn, const TypeDesc& arg) {
        if (fn == "count") return TypeDesc::make_scalar(ScalarType::Int);
        if (fn == "avg") return TypeDesc::make_scalar(ScalarType::Float);
        return arg;
    }

    /// Composite reassembly: pack a path's leaves (and nested arrays) back
    /// into its logical shape from the flat slots.
    PackSpec pack_of(const std::string& binder, std::vector<std::string>& parts,
                     const AttributeDef& attr) {
        if (attr.is_multi() || attr.is_scalar()) {
            PackSpec p;
            p.column = cur_.slots.at(slot_path(binder, parts));
            return p;
        }
        PackSpec p;
        for (const auto& c : attr.children) {
            parts.push_back(c.name);
            p.fields.emplace_back(c.name, pack_of(binder, parts, c));
            parts.pop_back();
        }
        return p;
    }

    PackSpec pack_of_path(const Path& path) {
        const std::string& cls = cls_.at(path.binder);
        const AttributeDef* attr = schema_.find_attribute(cls, path.parts[0]);
        std::vector<std::string> walk{path.parts[0]};
        const AttributeDef* cur = attr;
        for (size_t i = 1; i < path.parts.size(); ++i) {
            for (const auto& c : cur->children)
                if (c.name == path.parts[i]) cur = &c;
            walk.push_back(path.parts[i]);
        }
        return pack_of(path.binder, walk, *cur);
    }

    void shape_output() {
        bool has_agg = false, has_nested = false;
        for (const auto& item : q_.select) {
            if (item.kind == SelectItem::Kind::Nested) has_nested = true;
            if (item.kind == SelectItem::Kind::Expr &&
                item.expr.kind == Expr::Kind::Aggregate)
                has_agg = true;
        }

        if (has_agg || has_nested) {
            (void)infer_groupby(q_); // surfaces the bare-mv diagnostic
            shape_grouped(has_nested);
            return;
        }

        // plain projection
        PlanNode proj;
        proj.op = PlanNode::Op::Project;
        for (const auto& item : q_.select) project_item(proj, item);
        proj.children.push_back(std::move(cur_.node));
        cur_.node = std::move(proj);
    }

    void project_item(PlanNode& proj, const SelectItem& item) {
        switch (item.kind) {
        case SelectItem::Kind::Star:
            for (const auto& attr : item.star_attrs) {
                Path p;
                p.binder = item.star_binder;
                p.parts = {attr};
                PackSpec spec = pack_of_path(p);
                proj.projections.push_back({attr, spec});
                proj.columns.push_back(
                    {attr, schema_.find_attribute(cls_.at(item.star_binder), attr)->type()});
            }
            break;
        case SelectItem::Kind::Expr: {
            const Expr& e = item.expr;
            std::string name = item.output_name();
            if (e.kind == Expr::Kind::PathRef && e.path.bound &&
                e.path.bound->type.is_composite()) {
                PackSpec spec = pack_of_path(e.path);
                proj.projections.push_back({name, spec});
                proj.columns.push_back({name, e.path.bound->type});
            } else {
                PackSpec spec;
                spec.column = expr_slot(e);
                proj.projections.push_back({name, spec});
                TypeDesc t = e.path.bound->type;
                if (e.kind == Expr::Kind::Unnest) t = t.element();
                proj.columns.push_back({name, t});
            }
            break;
        }
        case SelectItem::Kind::Nested:
            throw Error("internal: nested item in plain projection");
        }
    }

    void shape_grouped(bool has_nested) {
        PlanNode g;
        g.op = has_nested ? PlanNode::Op::GroupNest : PlanNode::Op::Aggregate;

        // group keys first (select order), then aggregates, then nests
        for (const auto& item : q_.select) {
            if (item.kind == SelectItem::Kind::Star) {
                for (const auto& attr : item.star_attrs) {
                    Path p;
                    p.binder = item.star_binder;
                    p.parts = {attr};
                    const AttributeDef* a =
                        schema_.find_attribute(cls_.at(item.star_binder), attr);
                    if (a->is_composite())
                        throw Error("cannot group by composite attribute '" + attr +
                                    "'; select its fields");
                    g.group_keys.push_back(slot_of(p));
                    g.columns.push_back({slot_path(p.binder, p.parts), a->type()});
                }
            } else if (item.kind == SelectItem::Kind::Expr &&
                       item.expr.kind != Expr::Kind::Aggregate) {
                const Expr& e = item.expr;
                if (e.kind == Expr::Kind::PathRef && e.path.bound->type.is_composite())
                    throw Error("cannot group by composite attribute '" + e.path.text() +
                                "'; select its fields");
                int slot = expr_slot(e);
                TypeDesc t = e.path.bound->type;
                if (e.kind == Expr::Kind::Unnest) t = t.element();
                g.group_keys.push_back(slot);
                g.columns.push_back({cur_.node.columns[static_cast<size_t>(slot)].name, t});
            }
        }
        for (const auto& item : q_.select) {
            if (item.kind != SelectItem::Kind::Expr ||
                item.expr.kind != Expr::Kind::Aggregate)
                continue;
            PlanNode::AggSpec a;
            a.fn = item.expr.agg_fn;
            a.column = slot_of(item.expr.path);
            a.name = item.output_name();
            TypeDesc t = agg_type(a.fn, item.expr.path.bound->type);
            g.aggs.push_back(a);
            g.columns.push_back({a.name, t});
        }
        for (const auto& item : q_.select) {
            if (item.kind != SelectItem::Kind::Nested) continue;
            PlanNode::NestSpec nest;
            nest.name = item.name;
            bool single = item.items.size() == 1;
            std::vector<std::pair<std::string, TypeDesc>> fields;
            for (const auto& sub : item.items) {
                if (sub.expr.path.bound->type.is_composite())
                    throw Error("nested select fields must be scalar or multi-valued; '" +
                                sub.expr.path.text() + "' is composite");
                int slot = slot_of(sub.expr.path);
                nest.fields.emplace_back(slot, single ? "" : sub.output_name());
                fields.emplace_back(sub.output_name(), sub.expr.path.bound->type);
            }
            TypeDesc t = single ? TypeDesc::make_array(fields.front().second)
                                : TypeDesc::make_array(TypeDesc::make_composite(fields));
            g.nests.push_back(nest);
            g.columns.push_back({item.name, t});
        }

        size_t n_keys = g.group_keys.size();
        size_t n_aggs = g.aggs.size();
        g.children.push_back(std::move(cur_.node));
        cur_.node = std::move(g);
        cur_.slots.clear();

        // final projection puts everything back into select order
        PlanNode proj;
        proj.op = PlanNode::Op::Project;
        size_t key_i = 0, agg_i = 0, nest_i = 0;
        for (const auto& item : q_.select) {
            if (item.kind == SelectItem::Kind::Star) {
                for (const auto& attr : item.star_attrs) {
                    PackSpec spec;
                    spec.column = static_cast<int>(key_i++);
                    proj.projections.push_back({attr, spec});
                    proj.columns.push_back(
                        {attr, cur_.node.columns[static_cast<size_t>(spec.column)].type});
                }
            } else if (item.kind == SelectItem::Kind::Nested) {
                PackSpec spec;
                spec.column = static_cast<int>(n_keys + n_aggs + nest_i++);
                proj.projections.push_back({item.output_name(), spec});
                proj.columns.push_back(
                    {item.output_name(), cur_.node.columns[static_cast<size_t>(spec.column)].type});
            } else if (item.expr.kind == Expr::Kind::Aggregate) {
                PackSpec spec;
                spec.column = static_cast<int>(n_keys + agg_i++);
                proj.projections.push_back({item.output_name(), spec});
                proj.columns.push_back(
                    {item.output_name(), cur_.node.columns[static_cast<size_t>(spec.column)].type});
            } else {
                PackSpec spec;
                spec.column = static_cast<int>(key_i++);
                proj.projections.push_back({item.output_name(), spec});
                proj.columns.push_back(
                    {item.output_name(), cur_.node.columns[static_cast<size_t>(spec.column)].type});
            }
        }
        proj.children.push_back(std::move(cur_.node));
        cur_.node = std::move(proj);
    }
};

} // namespace

PlanNode compile_query(const ErSchema& schema, const Mapping& mapping,
                       const LogicalQuery& query) {
    return QueryCompiler(schema, mapping, query).run();
}

// ---------------------------------------------------------------------------
// result shape
// ---------------------------------------------------------------------------

std::vector<PlanColumn> result_shape(const ErSchema& schema, const LogicalQuery& query) {
    if (!query.bound) throw Error("result_shape requires a bound query");
    std::map<std::string, std::string> cls;
    for (const auto& [b, e] : query.binders()) cls[b] = e;

    std::vector<PlanColumn> out;
    for (const auto& item : query.select) {
        switch (item.kind) {
        case SelectItem::Kind::Star:
            for (const auto& attr : item.star_attrs) {
                const AttributeDef* a = schema.find_attribute(cls.at(item.star_binder), attr);
                out.push_back({attr, a->type()});
            }
            break;
        case SelectItem::Kind::Expr: {
            const Expr& e = item.expr;
            TypeDesc t = e.path.bound->type;
            if (e.kind == Expr::Kind::Unnest) t = t.element();
            if (e.kind == Expr::Kind::Aggregate) {
                if (e.agg_fn == "count") t = TypeDesc::make_scalar(ScalarType::Int);
                else if (e.agg_fn == "avg") t = TypeDesc::make_scalar(ScalarType::Float);
            }
            out.push_back({item.output_name(), t});
            break;
        }
        case SelectItem::Kind::Nested: {
            std::vector<std::pair<std::string, TypeDesc>> fields;
            for (const auto& sub : item.items)
                fields.emplace_back(sub.output_name(), sub.expr.path.bound->type);
            TypeDesc t = fields.size() == 1
                             ? TypeDesc::make_array(fields.front().second)
                             : TypeDesc::make_array(TypeDesc::make_composite(fields));
            out.push_back({item.output_name(), t});
            break;
        }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CRUD compilation
// ---------------------------------------------------------------------------

namespace {

Value doc_at(const Value& doc, const std::vector<std::string>& path, size_t from = 0) {
    const Value* cur = &doc;
    for (size_t i = from; i < path.size(); ++i) {
        if (!cur->is_composite()) return Value{};
        auto it = cur->as_composite().find(path[i]);
        if (it == cur->as_composite().end()) return Value{};
        cur = &it->second;
    }
    return *cur;
}

Value normalized_array(Value v) {
    if (v.is_absent()) return Value{Value::Array{}};
    return v;
}

std::string rel_attr_column(const std::string& relationship, const std::string& attr) {
    return relationship + "_" + attr;
}

/// Splits the path portion of an attribute node id ("attr:<Object>.<p>...").
std::vector<std::string> node_id_path(const std::string& node) {
    std::string rest = node.substr(5);
    std::vector<std::string> path;
    size_t pos = rest.find('.') + 1;
    while (pos <= rest.size()) {
        size_t next = rest.find('.', pos);
        path.push_back(rest.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return path;
}

std::vector<std::pair<std::string, Value>> closure_match(
    const ErSchema& schema, const std::string& entity, const std::vector<Value>& key,
    size_t prefix_len = SIZE_MAX) {
    auto closure = key_closure(schema, entity);
    std::vector<std::pair<std::string, Value>> out;
    size_t n = std::min(prefix_len, std::min(closure.size(), key.size()));
    for (size_t i = 0; i < n; ++i)
        out.emplace_back(closure[i].entity + "_" + closure[i].attribute, key[i]);
    return out;
}

/// Insert of one element row into an exploded multi-value fragment.
WriteAction mv_element_insert(const ErSchema& schema, const Fragment& frag,
                              const std::string& entity, const std::vector<Value>& key,
                              const Value& elem) {
    WriteAction a;
    a.kind = WriteAction::Kind::Insert;
    a.fragment = frag.name;
    for (const auto& [name, v] : closure_match(schema, entity, key)) a.set.emplace_back(name, v);
    for (const auto& col : frag.columns) {
        if (col.node == frag.mv_node) {
            a.set.emplace_back(col.name, elem); // scalar element
        } else if (col.node.rfind(frag.mv_node + ".", 0) == 0) {
            std::string sub = col.node.substr(frag.mv_node.size() + 1);
            std::vector<std::string> subpath;
            size_t p = 0;
            while (p <= sub.size()) {
                size_t next = sub.find('.', p);
                subpath.push_back(sub.substr(p, next - p));
                if (next == std::string::npos) break;
                p = next + 1;
            }
            Value v = doc_at(elem, subpath);
            if (col.type.is_array()) v = normalized_array(std::move(v));
            a.set.emplace_back(col.name, std::move(v));
        }
    }
    return a;
}

/// Leaf columns (and array columns) a fragment stores for attribute subtree
/// `attr` of class `declaring`, as (column name, relative path).
void attr_leaf_columns(const Fragment& frag, Section section, const std::string& declaring,
                       const AttributeDef& attr, std::vector<std::string>& path,
                       std::vector<std::pair<const Column*, std::vector<std::string>>>& out) {
    std::string id = attribute_node_id(declaring, path);
    const std::vector<Column>& cols = [&]() -> const std::vector<Column>& {
        switch (section) {
        case Section::Left: return frag.left_columns;
        case Section::Right: return frag.right_columns;
        case Section::Edges: return frag.edge_columns;
        default: return frag.columns;
        }
    }();
    if (attr.is_multi() || attr.is_scalar()) {
        for (const auto& c : cols)
            if (c.node == id) out.emplace_back(&c, path);
        return;
    }
    for (const auto& c : attr.children) {
        path.push_back(c.name);
        attr_leaf_columns(frag, section, declaring, c, path, out);
        path.pop_back();
    }
}

bool is_ancestor_or_self(const ErSchema& schema, const std::string& anc, const std::string& cls) {
    return schema.is_subclass_of(cls, anc);
}

/// All (fragment, section) pairs whose rows host instances of concrete
/// class `cls` — one row per hosted instance.
std::vector<std::pair<const Fragment*, Section>> hosting_rows(const ErSchema& schema,
                                                              const Mapping& mapping,
                                                              const std::string& cls) {
    std::vector<std::pair<const Fragment*, Section>> out;
    for (const auto& f : mapping.fragments) {
        if (f.kind == Fragment::Kind::EntityRows) {
            if (f.exact ? f.anchor == cls : is_ancestor_or_self(schema, f.anchor, cls))
                out.emplace_back(&f, Section::Whole);
        } else if (f.kind == Fragment::Kind::FactorizedRows) {
            if (is_ancestor_or_self(schema, f.factorized.left, cls))
                out.emplace_back(&f, Section::Left);
            if (is_ancestor_or_self(schema, f.factorized.right, cls))
                out.emplace_back(&f, Section::Right);
        }
    }
    return out;
}

const std::vector<Column>& section_cols(const Fragment& f, Section s) {
    switch (s) {
    case Section::Left: return f.left_columns;
    case Section::Right: return f.right_columns;
    case Section::Edges: return f.edge_columns;
    default: return f.columns;
    }
}

} // namespace

void build_entity_insert(const ErSchema& schema, const Mapping& mapping, const std::string& entity,
                         const Value& doc, WriteSet& out) {
    const EntitySetDef& e = schema.entity(entity);
    auto closure = key_closure(schema, entity);
    std::vector<Value> key;
    for (const auto& part : closure) {
        Value v = doc_at(doc, {part.attribute});
        if (v.is_absent())
            throw Error("document for '" + entity + "' misses key field '" + part.attribute + "'");
        key.push_back(v);
    }

    // one row per hosting fragment (root-most anchors first for readability)
    auto hosts = hosting_rows(schema, mapping, entity);
    std::stable_sort(hosts.begin(), hosts.end(), [&](const auto& a, const auto& b) {
        auto anchor = [&](const std::pair<const Fragment*, Section>& h) {
            const Fragment& f = *h.first;
            if (f.kind == Fragment::Kind::FactorizedRows)
                return h.second == Section::Left ? f.factorized.left : f.factorized.right;
            return f.anchor;
        };
        return schema.chain_of(anchor(a)).size() < schema.chain_of(anchor(b)).size();
    });

    for (const auto& [frag, section] : hosts) {
        WriteAction a;
        a.kind = WriteAction::Kind::Insert;
        a.fragment = frag->name;
        a.section = section;
        std::set<std::string> set_names;
        for (const auto& [name, v] : closure_match(schema, entity, key)) {
            a.set.emplace_back(name, v);
            set_names.insert(name);
        }
        for (const auto& col : section_cols(*frag, section)) {
            if (set_names.count(col.name)) continue;
            if (col.name == "type" && col.node.empty()) {
                a.set.emplace_back("type", Value{entity});
                continue;
            }
            if (col.node.rfind("attr:", 0) == 0) {
                std::string declaring = col.node.substr(5, col.node.find('.') - 5);
                if (!is_ancestor_or_self(schema, declaring, entity)) continue;
                Value v = doc_at(doc, node_id_path(col.node));
                if (col.type.is_array()) v = normalized_array(std::move(v));
                a.set.emplace_back(col.name, std::move(v));
                set_names.insert(col.name);
                continue;
            }
            if (col.node.rfind("entity:", 0) == 0) {
                // embedded weak array: starts empty
                a.set.emplace_back(col.name, Value{Value::Array{}});
                continue;
            }
            // folded fk columns start absent; edge/desc columns not applicable
        }
        out.actions.push_back(std::move(a));
    }

    // exploded multi-value fragments of any chain class
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::MultiValueRows) continue;
        if (!is_ancestor_or_self(schema, frag.anchor, entity)) continue;
        Value arr = doc_at(doc, node_id_path(frag.mv_node));
        if (!arr.is_array()) continue;
        for (const auto& elem : arr.as_array())
            out.actions.push_back(mv_element_insert(schema, frag, entity, key, elem));
    }

    // embedded representation: one nested element per hosting owner fragment
    if (e.is_weak()) {
        for (const auto& frag : mapping.fragments) {
            for (const auto& emb : frag.nesting.embedded) {
                if (emb.entity != entity) continue;
                WriteAction a;
                a.kind = WriteAction::Kind::NestedInsert;
                a.fragment = frag.name;
                a.column = emb.column;
                auto oc = key_closure(schema, e.weak_owner->owner);
                a.match = closure_match(schema, entity, key, oc.size());
                Value::Composite elem;
                for (const auto& attr : e.attributes) {
                    Value v = doc_at(doc, {attr.name});
                    if (attr.is_multi()) v = normalized_array(std::move(v));
                    elem[attr.name] = std::move(v);
                }
                a.element = Value{std::move(elem)};
                for (const auto& attr : e.attributes)
                    if (attr.is_key) a.element_key.push_back(attr.name);
                out.actions.push_back(std::move(a));
            }
        }
    }
}

void build_relationship_insert(const ErSchema& schema, const Mapping& mapping,
                               const std::string& relationship,
                               const std::vector<std::vector<Value>>& role_keys,
                               const Value& descriptive, WriteSet& out) {
    const RelationshipDef& rel = schema.relationship(relationship);
    for (const auto& p : rel.participants) {
        const auto& owner = schema.entity(p.entity).weak_owner;
        if (owner && owner->identifying_relationship == relationship)
            throw Error("relationship '" + relationship +
                        "' is identifying; its instances exist through the weak entity");
    }
    if (role_keys.size() != rel.participants.size())
        throw Error("relationship '" + relationship + "' needs " +
                    std::to_string(rel.participants.size()) + " role keys");

    // factorized?
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::FactorizedRows ||
            frag.factorized.relationship != relationship)
            continue;
        WriteAction a;
        a.kind = WriteAction::Kind::Insert;
        a.fragment = frag.name;
        a.section = Section::Edges;
        for (size_t pi = 0; pi < rel.participants.size(); ++pi) {
            const auto& p = rel.participants[pi];
            auto closure = key_closure(schema, p.entity);
            for (size_t i = 0; i < closure.size(); ++i)
                a.set.emplace_back(p.role + "_" + closure[i].attribute, role_keys[pi][i]);
        }
        for (const auto& attr : rel.attributes) {
            Value v = doc_at(descriptive, {attr.name});
            if (attr.is_multi()) v = normalized_array(std::move(v));
            a.set.emplace_back(rel_attr_column(rel.name, attr.name), std::move(v));
        }
        out.actions.push_back(std::move(a));
        return;
    }

    // relationship fragment?
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::RelationshipRows || frag.relationship != relationship)
            continue;
        WriteAction a;
        a.kind = WriteAction::Kind::Insert;
        a.fragment = frag.name;
        for (size_t pi = 0; pi < rel.participants.size(); ++pi) {
            const auto& p = rel.participants[pi];
            auto closure = key_closure(schema, p.entity);
            for (size_t i = 0; i < closure.size(); ++i)
                a.set.emplace_back(p.role + "_" + closure[i].attribute, role_keys[pi][i]);
        }
        for (const auto& attr : rel.attributes) {
            Value v = doc_at(descriptive, {attr.name});
            if (attr.is_multi()) v = normalized_array(std::move(v));
            a.set.emplace_back(rel_attr_column(rel.name, attr.name), std::move(v));
        }
        out.actions.push_back(std::move(a));
        return;
    }

    // folded foreign key
    const FoldedFk* fk = nullptr;
    for (const auto& frag : mapping.fragments)
        for (const auto& f : frag.folded_fks)
            if (f.relationship == relationship) fk = &f;
    if (!fk)
        throw Error("mapping stores relationship '" + relationship + "' nowhere");

    size_t host_i = 0, fk_i = 0;
    for (size_t pi = 0; pi < rel.participants.size(); ++pi) {
        if (rel.participants[pi].role == fk->host_role) host_i = pi;
        if (rel.participants[pi].role == fk->fk_role) fk_i = pi;
    }
    const std::string& host_entity = rel.participants[host_i].entity;
    auto host_closure = key_closure(schema, host_entity);
    auto fk_closure = key_closure(schema, rel.participants[fk_i].entity);
    bool one_one = rel.participants[host_i].cardinality == Cardinality::One &&
                   rel.participants[fk_i].cardinality == Cardinality::One;

    for (const auto& frag : mapping.fragments) {
        bool carries = false;
        for (const auto& f : frag.folded_fks)
            if (f.relationship == relationship) carries = true;
        if (!carries) continue;
        Section section = Section::Whole;
        std::string anchor = frag.anchor;
        if (frag.kind == Fragment::Kind::FactorizedRows) {
            // the fk lives in whichever row-group hosts the host entity
            if (is_ancestor_or_self(schema, frag.factorized.left, host_entity)) {
                section = Section::Left;
                anchor = frag.factorized.left;
            } else {
                section = Section::Right;
                anchor = frag.factorized.right;
            }
        }
        bool typed = false;
        for (const auto& c : section_cols(frag, section))
            if (c.name == "type") typed = true;
        bool needs_type =
            typed && anchor != host_entity && is_ancestor_or_self(schema, anchor, host_entity);

        auto emit = [&](const std::string& type_class) {
            WriteAction a;
            a.kind = WriteAction::Kind::Update;
            a.fragment = frag.name;
            a.section = section;
            for (size_t i = 0; i < host_closure.size(); ++i)
                a.match.emplace_back(host_closure[i].entity + "_" + host_closure[i].attribute,
                                     role_keys[host_i][i]);
            if (!type_class.empty()) a.match.emplace_back("type", Value{type_class});
            for (size_t i = 0; i < fk_closure.size(); ++i) {
                std::string col = fk->fk_role + "_" + fk_closure[i].attribute;
                a.set.emplace_back(col, role_keys[fk_i][i]);
                a.guard_absent.push_back(col);
                if (one_one) a.guard_no_other_row.emplace_back(col, role_keys[fk_i][i]);
            }
            out.actions.push_back(std::move(a));
        };
        if (needs_type)
            for (const auto& sub : schema.subtree_of(host_entity)) emit(sub);
        else
            emit("");
    }
}

namespace {

/// Entity classes erased when one instance of `root_or_weak` goes away:
/// its own subtree plus every weak entity transitively owned by it.
std::set<std::string> purge_affected(const ErSchema& schema, const std::string& entity) {
    std::set<std::string> affected;
    std::vector<std::string> queue{entity};
    while (!queue.empty()) {
        std::string cls = queue.back();
        queue.pop_back();
        for (const auto& sub : schema.subtree_of(cls))
            if (affected.insert(sub).second) {
                for (const auto& [name, e] : schema.entities)
                    if (e.weak_owner && e.weak_owner->owner == sub) queue.push_back(name);
            }
    }
    return affected;
}

} // namespace

WriteSet purge_compile(const ErSchema& schema, const Mapping& mapping, const std::string& entity,
                       const std::vector<Value>& key) {
    const EntitySetDef& e = schema.entity(entity);
    if (e.is_subclass())
        throw Error("purge target '" + entity + "' is a subclass; address the hierarchy root");
    auto key_cl = key_closure(schema, entity);
    if (key.size() != key_cl.size())
        throw Error("purge of '" + entity + "' needs " + std::to_string(key_cl.size()) +
                    " key value(s)");

    std::set<std::string> affected = purge_affected(schema, entity);
    size_t klen = key.size();
    WriteSet out;

    auto role_prefix_match = [&](const std::string& role, const std::string& role_entity) {
        auto closure = key_closure(schema, role_entity);
        std::vector<std::pair<std::string, Value>> m;
        for (size_t i = 0; i < klen && i < closure.size(); ++i)
            m.emplace_back(role + "_" + closure[i].attribute, key[i]);
        return m;
    };
    auto touches_affected = [&](const std::string& role_entity) {
        for (const auto& sub : schema.subtree_of(role_entity))
            if (affected.count(sub)) return true;
        // an ancestor of an affected class shares its closure
        for (const auto& a : affected)
            if (is_ancestor_or_self(schema, role_entity, a)) return true;
        return false;
    };

    // 1. adjacency edges of factorized relationships
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::FactorizedRows) continue;
        const RelationshipDef& rel = schema.relationship(frag.factorized.relationship);
        for (const auto& p : rel.participants) {
            if (!touches_affected(p.entity)) continue;
            WriteAction a;
            a.kind = WriteAction::Kind::Delete;
            a.fragment = frag.name;
            a.section = Section::Edges;
            a.match = role_prefix_match(p.role, p.entity);
            out.actions.push_back(std::move(a));
        }
    }

    // 2. folded foreign keys referencing an affected instance
    for (const auto& frag : mapping.fragments) {
        for (const auto& fk : frag.folded_fks) {
            const RelationshipDef& rel = schema.relationship(fk.relationship);
            std::string fk_entity;
            for (const auto& p : rel.participants)
                if (p.role == fk.fk_role) fk_entity = p.entity;
            if (!touches_affected(fk_entity)) continue;
            Section section = Section::Whole;
            if (frag.kind == Fragment::Kind::FactorizedRows) {
                // locate the group carrying the fk columns
                std::string col0 = fk.fk_role + "_" + key_closure(schema, fk_entity)[0].attribute;
                bool in_left = false;
                for (const auto& c : frag.left_columns)
                    if (c.name == col0) in_left = true;
                section = in_left ? Section::Left : Section::Right;
            }
            WriteAction a;
            a.kind = WriteAction::Kind::Update;
            a.fragment = frag.name;
            a.section = section;
            a.match = role_prefix_match(fk.fk_role, fk_entity);
            auto closure = key_closure(schema, fk_entity);
            for (const auto& part : closure)
                a.set.emplace_back(fk.fk_role + "_" + part.attribute, Value{});
            out.actions.push_back(std::move(a));
        }
    }

    // 3. relationship-fragment rows
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::RelationshipRows) continue;
        const RelationshipDef& rel = schema.relationship(frag.relationship);
        for (const auto& p : rel.participants) {
            if (!touches_affected(p.entity)) continue;
            WriteAction a;
            a.kind = WriteAction::Kind::Delete;
            a.fragment = frag.name;
            a.match = role_prefix_match(p.role, p.entity);
            out.actions.push_back(std::move(a));
        }
    }

    // 4. embedded elements (a weak entity addressed directly, owner staying)
    if (e.is_weak()) {
        for (const auto& frag : mapping.fragments) {
            for (const auto& emb : frag.nesting.embedded) {
                if (emb.entity != entity) continue;
                auto oc = key_closure(schema, e.weak_owner->owner);
                WriteAction a;
                a.kind = WriteAction::Kind::NestedDelete;
                a.fragment = frag.name;
                a.column = emb.column;
                a.match = closure_match(schema, entity, key, oc.size());
                Value::Composite sel;
                for (size_t i = oc.size(); i < key_cl.size(); ++i)
                    sel[key_cl[i].attribute] = key[i];
                a.element = Value{std::move(sel)};
                out.actions.push_back(std::move(a));
            }
        }
    }

    // 5. exploded multi-value rows
    for (const auto& frag : mapping.fragments) {
        if (frag.kind != Fragment::Kind::MultiValueRows) continue;
        bool owned = false;
        for (const auto& sub : schema.subtree_of(frag.anchor))
            if (affected.count(sub)) owned = true;
        for (const auto& a : affected)
            if (is_ancestor_or_self(schema, frag.anchor, a)) owned = true;
        if (!owned) continue;
        WriteAction a;
        a.kind = WriteAction::Kind::Delete;
        a.fragment = frag.name;
        a.match = closure_match(schema, frag.anchor, key, klen);
        out.actions.push_back(std::move(a));
    }

    // 6. entity rows and row-group members
    for (const auto& frag : mapping.fragments) {
        if (frag.kind == Fragment::Kind::EntityRows) {
            if (!affected.count(frag.anchor)) continue;
            WriteAction a;
            a.kind = WriteAction::Kind::Delete;
            a.fragment = frag.name;
            a.match = closure_match(schema, frag.anchor, key, klen);
            out.actions.push_back(std::move(a));
        } else if (frag.kind == Fragment::Kind::FactorizedRows) {
            for (Section sec : {Section::Left, Section::Right}) {
                std::string side =
                    sec == Section::Left ? frag.factorized.left : frag.factorized.right;
                if (!affected.count(side)) continue;
                WriteAction a;
                a.kind = WriteAction::Kind::Delete;
                a.fragment = frag.name;
                a.section = sec;
                a.match = closure_match(schema, side, key, klen);
                out.actions.push_back(std::move(a));
            }
        }
    }

    return out;
}

namespace {

void compile_update(const ErSchema& schema, const Mapping& mapping, const CrudStatement& stmt,
                    WriteSet& out) {
    const std::string& target = stmt.target;
    const EntitySetDef& e = schema.entity(target);
    auto closure = key_closure(schema, target);
    std::vector<Value> key;
    for (const auto& [name, v] : stmt.key_pred) key.push_back(v);

    // embedded weak entity: field updates inside the owner's array elements
    if (e.is_weak()) {
        for (const auto& frag : mapping.fragments) {
            for (const auto& emb : frag.nesting.embedded) {
                if (emb.entity != target) continue;
                auto oc = key_closure(schema, e.weak_owner->owner);
                WriteAction a;
                a.kind = WriteAction::Kind::NestedUpdate;
                a.fragment = frag.name;
                a.column = emb.column;
                a.match = closure_match(schema, target, key, oc.size());
                Value::Composite sel;
                for (size_t i = oc.size(); i < closure.size(); ++i)
                    sel[closure[i].attribute] = key[i];
                a.element = Value{std::move(sel)};
                for (const auto& [attr, v] : stmt.set_list) {
                    Value nv = v;
                    const AttributeDef* ad = e.find_attribute(attr);
                    if (ad && ad->is_multi()) nv = normalized_array(std::move(nv));
                    a.set.emplace_back(attr, std::move(nv));
                }
                out.actions.push_back(std::move(a));
            }
        }
    }

    for (const auto& [attr_name, value] : stmt.set_list) {
        std::string declaring;
        const AttributeDef* attr = schema.find_attribute(target, attr_name, &declaring);
        if (!attr) throw Error("entity set '" + target + "' has no attribute '" + attr_name + "'");

        // flat and array columns on every fragment hosting rows of the target
        for (const auto& frag : mapping.fragments) {
            std::vector<std::pair<Section, std::string>> spots; // (section, anchor)
            if (frag.kind == Fragment::Kind::EntityRows) {
                bool chain_host = is_ancestor_or_self(schema, frag.anchor, target);
                bool sub_host = is_ancestor_or_self(schema, target, frag.anchor);
                if (chain_host || sub_host) spots.emplace_back(Section::Whole, frag.anchor);
            } else if (frag.kind == Fragment::Kind::FactorizedRows) {
                for (Section sec : {Section::Left, Section::Right}) {
                    std::string side =
                        sec == Section::Left ? frag.factorized.left : frag.factorized.right;
                    if (is_ancestor_or_self(schema, side, target) ||
                        is_ancestor_or_self(schema, target, side))
                        spots.emplace_back(sec, side);
                }
            }
            for (const auto& [section, anchor] : spots) {
                std::vector<std::pair<const Column*, std::vector<std::string>>> leaf_cols;
                std::vector<std::string> path{attr_name};
                attr_leaf_columns(frag, section, declaring, *attr, path, leaf_cols);
                if (leaf_cols.empty()) continue;

                bool typed = false;
                for (const auto& c : section_cols(frag, section))
                    if (c.name == "type") typed = true;
                bool hosts_more = typed && anchor != target &&
                                  is_ancestor_or_self(schema, anchor, target);

                auto emit = [&](const std::string& type_class) {
                    WriteAction a;
                    a.kind = WriteAction::Kind::Update;
                    a.fragment = frag.name;
                    a.section = section;
                    a.match = closure_match(schema, target, key);
                    if (!type_class.empty()) a.match.emplace_back("type", Value{type_class});
                    for (const auto& [col, rel_path] : leaf_cols) {
                        Value v = doc_at(value, rel_path, 1);
                        if (col->type.is_array()) v = normalized_array(std::move(v));
                        a.set.emplace_back(col->name, std::move(v));
                    }
                    out.actions.push_back(std::move(a));
                };
                if (hosts_more)
                    for (const auto& sub : schema.subtree_of(target)) emit(sub);
                else
                    emit("");
            }
        }

        // exploded multi-value fragments under this attribute: refresh
        for (const auto& frag : mapping.fragments) {
            if (frag.kind != Fragment::Kind::MultiValueRows) continue;
            if (!is_ancestor_or_self(schema, frag.anchor, target) &&
                !is_ancestor_or_self(schema, target, frag.anchor))
                continue;
            std::string prefix = attribute_node_id(declaring, {attr_name});
            if (frag.mv_node != prefix && frag.mv_node.rfind(prefix + ".", 0) != 0) continue;

            WriteAction del;
            del.kind = WriteAction::Kind::Delete;
            del.fragment = frag.name;
            del.match = closure_match(schema, target, key);
            out.actions.push_back(std::move(del));

            // reinsert from the new value
            Value arr = doc_at(value, node_id_path(frag.mv_node), 1);
            if (!arr.is_array()) continue;
            for (const auto& elem : arr.as_array())
                out.actions.push_back(mv_element_insert(schema, frag, target, key, elem));
        }
    }
}

} // namespace

WriteSet compile_crud(const ErSchema& schema, const Mapping& mapping, const CrudStatement& stmt) {
    if (!stmt.bound) throw Error("compile_crud requires a bound statement");
    WriteSet out;
    switch (stmt.kind) {
    case CrudStatement::Kind::InsertEntity:
        build_entity_insert(schema, mapping, stmt.target, stmt.document, out);
        break;
    case CrudStatement::Kind::InsertRelationship: {
        std::vector<std::vector<Value>> keys;
        for (const auto& [role, k] : stmt.role_keys) keys.push_back(k);
        build_relationship_insert(schema, mapping, stmt.target, keys, stmt.descriptive, out);
        break;
    }
    case CrudStatement::Kind::UpdateEntity:
        compile_update(schema, mapping, stmt, out);
        break;
    case CrudStatement::Kind::DeleteEntity:
    case CrudStatement::Kind::PurgeEntity: {
        std::vector<Value> key;
        for (const auto& [name, v] : stmt.key_pred) key.push_back(v);
        return purge_compile(schema, mapping, stmt.target, key);
    }
    }
    return out;
}

} // namespace erdb
