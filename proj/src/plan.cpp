#include "erdb/plan.hpp"

#include <set>

namespace erdb {

const char* section_name(Section s) {
    switch (s) {
    case Section::Whole: return "whole";
    case Section::Left: return "left";
    case Section::Right: return "right";
    case Section::Edges: return "edges";
    }
    return "?";
}

namespace {

void collect_metrics(const PlanNode& n, PlanMetrics& m, std::set<std::string>& fragments) {
    switch (n.op) {
    case PlanNode::Op::Scan:
        fragments.insert(n.fragment);
        m.estimated_scan_width += n.scan_columns.size();
        break;
    case PlanNode::Op::Join: m.joins += 1; break;
    case PlanNode::Op::UnionAll: m.unions += 1; break;
    case PlanNode::Op::Unnest: m.unnests += 1; break;
    default: break;
    }
    for (const auto& c : n.children) collect_metrics(c, m, fragments);
}

const char* cmp_text(PlanPredicate::CmpOp op) {
    switch (op) {
    case PlanPredicate::CmpOp::Eq: return "=";
    case PlanPredicate::CmpOp::Ne: return "!=";
    case PlanPredicate::CmpOp::Lt: return "<";
    case PlanPredicate::CmpOp::Le: return "<=";
    case PlanPredicate::CmpOp::Gt: return ">";
    case PlanPredicate::CmpOp::Ge: return ">=";
    }
    return "?";
}

std::string operand_text(const PlanPredicate::Operand& o, const std::vector<PlanColumn>& cols) {
    if (o.is_column()) return cols[static_cast<size_t>(o.column)].name;
    return o.literal.canonical();
}

std::string predicate_text(const PlanPredicate& p, const std::vector<PlanColumn>& cols) {
    switch (p.kind) {
    case PlanPredicate::Kind::Compare:
        return operand_text(p.lhs, cols) + " " + cmp_text(p.op) + " " + operand_text(p.rhs, cols);
    case PlanPredicate::Kind::In: {
        std::string out = operand_text(p.lhs, cols) + " in (";
        for (size_t i = 0; i < p.in_list.size(); ++i) {
            if (i) out += ", ";
            out += p.in_list[i].canonical();
        }
        return out + ")";
    }
    case PlanPredicate::Kind::And:
    case PlanPredicate::Kind::Or: {
        std::string sep = p.kind == PlanPredicate::Kind::And ? " and " : " or ";
        std::string out;
        for (size_t i = 0; i < p.children.size(); ++i) {
            if (i) out += sep;
            out += "(" + predicate_text(p.children[i], cols) + ")";
        }
        return out;
    }
    case PlanPredicate::Kind::Not:
        return "not (" + predicate_text(p.children[0], cols) + ")";
    }
    return "?";
}

std::string pack_text(const PackSpec& s, const std::vector<PlanColumn>& cols) {
    if (s.is_column()) return cols[static_cast<size_t>(s.column)].name;
    std::string out = "{";
    for (size_t i = 0; i < s.fields.size(); ++i) {
        if (i) out += ", ";
        out += s.fields[i].first + ": " + pack_text(s.fields[i].second, cols);
    }
    return out + "}";
}

void print_node(const PlanNode& n, int depth, std::string& out) {
    out.append(static_cast<size_t>(depth) * 2, ' ');
    const std::vector<PlanColumn>* in = n.children.empty() ? nullptr : &n.children[0].columns;
    auto in_name = [&](int idx) { return (*in)[static_cast<size_t>(idx)].name; };

    switch (n.op) {
    case PlanNode::Op::Scan: {
        out += "scan " + n.fragment + " cols=[";
        for (size_t i = 0; i < n.scan_columns.size(); ++i) {
            const ScanColumn& c = n.scan_columns[i];
            if (i) out += ", ";
            if (c.section != Section::Whole) {
                out += section_name(c.section);
                out += '.';
            }
            out += std::to_string(c.index);
        }
        out += "] out=[";
        for (size_t i = 0; i < n.columns.size(); ++i) {
            if (i) out += ", ";
            out += n.columns[i].name;
        }
        out += "]";
        break;
    }
    case PlanNode::Op::Filter:
        out += "filter " + predicate_text(n.predicate, n.children[0].columns);
        break;
    case PlanNode::Op::Join: {
        out += n.join_kind == PlanNode::JoinKind::Inner ? "join inner on [" : "join left on [";
        for (size_t i = 0; i < n.join_keys.size(); ++i) {
            if (i) out += ", ";
            out += n.children[0].columns[static_cast<size_t>(n.join_keys[i].first)].name;
            out += " = ";
            out += n.children[1].columns[static_cast<size_t>(n.join_keys[i].second)].name;
        }
        out += "]";
        if (!n.coalesce_empty_arrays.empty()) {
            out += " empty_as_array=[";
            for (size_t i = 0; i < n.coalesce_empty_arrays.size(); ++i) {
                if (i) out += ", ";
                out += n.columns[static_cast<size_t>(n.coalesce_empty_arrays[i])].name;
            }
            out += "]";
        }
        break;
    }
    case PlanNode::Op::UnionAll:
        out += "union_all";
        break;
    case PlanNode::Op::Unnest:
        out += "unnest " + in_name(n.unnest_column);
        if (n.unnest_outer) out += " outer";
        break;
    case PlanNode::Op::Project: {
        out += "project [";
        for (size_t i = 0; i < n.projections.size(); ++i) {
            if (i) out += ", ";
            out += n.projections[i].name + " = " + pack_text(n.projections[i].source, *in);
        }
        out += "]";
        break;
    }
    case PlanNode::Op::GroupNest:
    case PlanNode::Op::Aggregate: {
        out += n.op == PlanNode::Op::GroupNest ? "group_nest keys=[" : "aggregate keys=[";
        for (size_t i = 0; i < n.group_keys.size(); ++i) {
            if (i) out += ", ";
            out += in_name(n.group_keys[i]);
        }
        out += "]";
        for (const auto& nest : n.nests) {
            out += " nest " + nest.name + "=[";
            for (size_t i = 0; i < nest.fields.size(); ++i) {
                if (i) out += ", ";
                out += in_name(nest.fields[i].first);
                if (!nest.fields[i].second.empty()) out += " as " + nest.fields[i].second;
            }
            out += "]";
        }
        for (const auto& agg : n.aggs) {
            out += " " + agg.fn + "(";
            out += agg.column < 0 ? "*" : in_name(agg.column);
            out += ") as " + agg.name;
        }
        break;
    }
    }
    out += '\n';
    for (const auto& c : n.children) print_node(c, depth + 1, out);
}

void flatten_element_columns(const std::string& prefix, const TypeDesc& t,
                             std::vector<PlanColumn>& out) {
    if (!t.is_composite()) return;
    for (const auto& [name, ft] : t.fields) {
        if (ft.is_composite())
            flatten_element_columns(prefix + "." + name, ft, out);
        else
            out.push_back({prefix + "." + name, ft});
    }
}

} // namespace

std::vector<PlanColumn> unnest_output_columns(const std::vector<PlanColumn>& in, int col) {
    std::vector<PlanColumn> out = in;
    const PlanColumn& arr = in.at(static_cast<size_t>(col));
    TypeDesc elem = arr.type.is_array() ? arr.type.element() : arr.type;
    out.push_back({arr.name + ".#elem", elem});
    flatten_element_columns(arr.name, elem, out);
    return out;
}

PlanMetrics plan_metrics(const PlanNode& plan) {
    PlanMetrics m;
    std::set<std::string> fragments;
    collect_metrics(plan, m, fragments);
    m.fragments_touched = fragments.size();
    return m;
}

std::string plan_metrics_text(const PlanMetrics& m) {
    std::string out;
    out += "joins=" + std::to_string(m.joins) + "\n";
    out += "unions=" + std::to_string(m.unions) + "\n";
    out += "unnests=" + std::to_string(m.unnests) + "\n";
    out += "fragments_touched=" + std::to_string(m.fragments_touched) + "\n";
    out += "estimated_scan_width=" + std::to_string(m.estimated_scan_width) + "\n";
    return out;
}

std::string plan_to_string(const PlanNode& plan) {
    std::string out;
    print_node(plan, 0, out);
    return out;
}

} // namespace erdb
