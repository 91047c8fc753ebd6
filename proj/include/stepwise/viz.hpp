#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/dag.hpp"

namespace stepwise {

namespace detail {

inline std::string fmt_num(double v, const char* f = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Body of a DOT double-quoted string. Newlines become the \n escape.
inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\r': break;
    default: out += c;
    }
  }
  return out;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    case '\'': out += "&#39;"; break;
    default: out += c;
    }
  }
  return out;
}

inline NodeStatus status_from_string(std::string_view s) {
  if (s == "open") return NodeStatus::Open;
  if (s == "error") return NodeStatus::Error;
  if (s == "finished") return NodeStatus::ProofFinished;
  throw FormatError("unknown node status '" + std::string(s) + "'");
}

inline EdgeKind edge_kind_from_string(std::string_view s) {
  if (s == "tree") return EdgeKind::Tree;
  if (s == "back") return EdgeKind::Back;
  throw FormatError("unknown edge kind '" + std::string(s) + "'");
}

} // namespace detail

// Status to style: Open is a box, Error a red ellipse, ProofFinished a green
// ellipse.
struct NodeStyle {
  const char* shape;
  const char* fill; // empty for unfilled
};

inline NodeStyle node_style(NodeStatus s) {
  switch (s) {
  case NodeStatus::Open: return {"box", ""};
  case NodeStatus::Error: return {"ellipse", "red"};
  case NodeStatus::ProofFinished: return {"ellipse", "green"};
  }
  return {"box", ""};
}

inline std::string export_dot(const SearchDag& dag, std::string_view name = "search") {
  std::string out = "digraph \"" + detail::dot_escape(name) + "\" {\n";
  out += "  rankdir=TB;\n";
  for (const auto& n : dag.nodes()) {
    const NodeStyle st = node_style(n.status);
    out += "  n" + std::to_string(n.id) + " [label=\"id=" + std::to_string(n.id) + "\\nscore=" +
           detail::fmt_num(n.score) + "\", shape=" + st.shape;
    if (*st.fill) out += std::string(", style=filled, fillcolor=") + st.fill;
    std::string tip = n.state ? n.state->goal() : n.message;
    if (!tip.empty()) out += ", tooltip=\"" + detail::dot_escape(tip) + "\"";
    out += "];\n";
  }
  for (const auto& e : dag.edges()) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
           detail::dot_escape(e.step.full_text()) + "\\n" + detail::fmt_num(e.beam_prob, "%.4g") + "\"";
    if (e.kind == EdgeKind::Back) out += ", style=dashed";
    out += "];\n";
  }
  out += "}\n";
  return out;
}

// Lossless DAG document. Terminal nodes carry no state.
inline nlohmann::ordered_json export_json(const SearchDag& dag) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : dag.nodes()) {
    nlohmann::ordered_json j;
    j["id"] = n.id;
    j["status"] = std::string(to_string(n.status));
    j["score"] = n.score;
    j["depth"] = n.depth;
    j["expansion_order"] = n.expansion_order ? nlohmann::ordered_json(*n.expansion_order) : nlohmann::ordered_json(nullptr);
    j["created_by"] = n.created_by ? nlohmann::ordered_json(*n.created_by) : nlohmann::ordered_json(nullptr);
    j["discarded"] = n.discarded;
    if (n.state) {
      j["goal"] = n.state->goal();
      j["state_id"] = n.state->id().value;
      j["state_depth"] = n.state->depth();
    } else {
      j["goal"] = nullptr;
    }
    j["error_kind"] = n.error ? nlohmann::ordered_json(std::string(to_string(*n.error))) : nlohmann::ordered_json(nullptr);
    j["message"] = n.message;
    doc["nodes"].push_back(std::move(j));
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : dag.edges()) {
    nlohmann::ordered_json j;
    j["from"] = e.from;
    j["to"] = e.to;
    j["step"] = e.step.full_text();
    j["tactic"] = e.step.tactic();
    j["premise"] = e.step.premise();
    j["beam_prob"] = e.beam_prob;
    j["kind"] = std::string(to_string(e.kind));
    doc["edges"].push_back(std::move(j));
  }
  return doc;
}

inline SearchDag import_json(const nlohmann::json& doc) {
  try {
    std::vector<SearchNode> nodes;
    for (const auto& j : doc.at("nodes")) {
      SearchNode n;
      n.id = j.at("id").get<NodeId>();
      n.status = detail::status_from_string(j.at("status").get<std::string>());
      n.score = j.at("score").get<double>();
      n.depth = j.at("depth").get<int>();
      if (!j.at("expansion_order").is_null()) n.expansion_order = j["expansion_order"].get<std::size_t>();
      if (j.contains("created_by") && !j["created_by"].is_null()) n.created_by = j["created_by"].get<std::size_t>();
      n.discarded = j.value("discarded", false);
      if (j.at("goal").is_string())
        n.state = ProofState(StateId{j.value("state_id", std::uint64_t{0})}, j["goal"].get<std::string>(),
                             j.value("state_depth", n.depth));
      if (j.contains("error_kind") && j["error_kind"].is_string())
        n.error = error_kind_from_string(j["error_kind"].get<std::string>());
      n.message = j.value("message", std::string());
      nodes.push_back(std::move(n));
    }
    std::vector<SearchEdge> edges;
    for (const auto& j : doc.at("edges")) {
      SearchEdge e;
      e.from = j.at("from").get<NodeId>();
      e.to = j.at("to").get<NodeId>();
      e.step = j.contains("tactic") ? ProofStep(j["tactic"].get<std::string>(), j.value("premise", std::string()))
                                    : ProofStep::parse(j.at("step").get<std::string>());
      e.beam_prob = j.at("beam_prob").get<double>();
      e.kind = detail::edge_kind_from_string(j.at("kind").get<std::string>());
      edges.push_back(std::move(e));
    }
    return SearchDag::from_parts(std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dag document: ") + e.what());
  }
}

// Self-contained review page: an inline SVG with nodes layered by depth, a
// legend, and the DAG document embedded as JSON. No external resources.
inline std::string render_html(const nlohmann::json& dag_doc, std::string_view title = "search dag") {
  const SearchDag dag = import_json(dag_doc);
  constexpr int kColW = 150, kRowH = 90, kNodeW = 110, kNodeH = 40, kMargin = 40, kLegendH = 60;

  std::map<int, std::vector<NodeId>> layers;
  for (const auto& n : dag.nodes()) layers[n.depth].push_back(n.id);
  std::size_t widest = 1;
  for (const auto& [d, ids] : layers) widest = std::max(widest, ids.size());
  std::vector<std::pair<int, int>> pos(dag.size());
  int row = 0;
  for (const auto& [d, ids] : layers) {
    const int offset = static_cast<int>((widest - ids.size()) * kColW / 2);
    for (std::size_t i = 0; i < ids.size(); ++i)
      pos[ids[i]] = {kMargin + offset + static_cast<int>(i) * kColW + kColW / 2,
                     kLegendH + kMargin + row * kRowH + kNodeH / 2};
    ++row;
  }
  const int width = 2 * kMargin + static_cast<int>(widest) * kColW;
  const int height = kLegendH + 2 * kMargin + std::max(row, 1) * kRowH;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg += "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
         "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#444\"/></marker></defs>\n";

  // legend
  svg += "<g class=\"legend\">\n";
  svg += "<rect x=\"20\" y=\"15\" width=\"40\" height=\"22\" fill=\"white\" stroke=\"black\"/>"
         "<text x=\"66\" y=\"30\">Open</text>\n";
  svg += "<ellipse cx=\"160\" cy=\"26\" rx=\"20\" ry=\"11\" fill=\"red\" stroke=\"black\"/>"
         "<text x=\"186\" y=\"30\">Error</text>\n";
  svg += "<ellipse cx=\"280\" cy=\"26\" rx=\"20\" ry=\"11\" fill=\"green\" stroke=\"black\"/>"
         "<text x=\"306\" y=\"30\">ProofFinished</text>\n";
  svg += "<line x1=\"420\" y1=\"26\" x2=\"470\" y2=\"26\" stroke=\"#444\" stroke-dasharray=\"5,4\"/>"
         "<text x=\"476\" y=\"30\">back edge</text>\n";
  svg += "</g>\n";

  for (const auto& e : dag.edges()) {
    const auto [x1, y1] = pos[e.from];
    const auto [x2, y2] = pos[e.to];
    const int ya = y1 + kNodeH / 2;
    const int yb = y2 <= y1 ? y2 + kNodeH / 2 : y2 - kNodeH / 2;
    svg += "<g class=\"edge\"><line x1=\"" + std::to_string(x1) + "\" y1=\"" + std::to_string(ya) + "\" x2=\"" +
           std::to_string(x2) + "\" y2=\"" + std::to_string(yb) + "\" stroke=\"#444\" marker-end=\"url(#arrow)\"";
    if (e.kind == EdgeKind::Back) svg += " stroke-dasharray=\"5,4\"";
    svg += "/><title>" + detail::xml_escape(e.step.full_text() + "\n" + detail::fmt_num(e.beam_prob, "%.4g")) +
           "</title><text x=\"" + std::to_string((x1 + x2) / 2 + 4) + "\" y=\"" + std::to_string((ya + yb) / 2) +
           "\" fill=\"#333\">" + detail::xml_escape(e.step.full_text()) + "</text></g>\n";
  }
  for (const auto& n : dag.nodes()) {
    const auto [x, y] = pos[n.id];
    const NodeStyle st = node_style(n.status);
    const std::string fill = *st.fill ? st.fill : "white";
    svg += "<g class=\"node " + std::string(to_string(n.status)) + "\">";
    if (n.status == NodeStatus::Open) {
      svg += "<rect x=\"" + std::to_string(x - kNodeW / 2) + "\" y=\"" + std::to_string(y - kNodeH / 2) +
             "\" width=\"" + std::to_string(kNodeW) + "\" height=\"" + std::to_string(kNodeH) + "\" fill=\"" + fill +
             "\" stroke=\"black\"/>";
    } else {
      svg += "<ellipse cx=\"" + std::to_string(x) + "\" cy=\"" + std::to_string(y) + "\" rx=\"" +
             std::to_string(kNodeW / 2) + "\" ry=\"" + std::to_string(kNodeH / 2) + "\" fill=\"" + fill +
             "\" stroke=\"black\"/>";
    }
    const std::string tip = n.state ? n.state->goal() : n.message;
    svg += "<title>" + detail::xml_escape(tip) + "</title>";
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y - 3) +
           "\" text-anchor=\"middle\">id=" + std::to_string(n.id) + "</text>";
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y + 11) +
           "\" text-anchor=\"middle\">score=" + detail::fmt_num(n.score, "%.4g") + "</text></g>\n";
  }
  svg += "</svg>\n";

  std::string data = export_json(dag).dump();
  for (std::size_t p = data.find("</"); p != std::string::npos; p = data.find("</", p + 3)) data.replace(p, 2, "<\\/");

  std::string html = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
                     detail::xml_escape(title) + "</title>\n<style>body{font-family:sans-serif;margin:16px}"
                     "svg{border:1px solid #ccc}</style>\n</head>\n<body>\n";
  html += "<h1>" + detail::xml_escape(title) + "</h1>\n";
  html += "<p>" + std::to_string(dag.size()) + " nodes, " + std::to_string(dag.edges().size()) + " edges, " +
          std::to_string(dag.expansions()) + " expansions</p>\n";
  html += svg;
  html += "<script type=\"application/json\" id=\"dag-data\">" + data + "</script>\n</body>\n</html>\n";
  return html;
}

} // namespace stepwise
