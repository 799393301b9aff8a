// Minimal GraphML reader covering the topology-zoo style of file: <key>
// declarations mapping data keys to attribute names, <node id>, <edge
// source target>, and nested <data key> values. Unknown attributes and keys
// are ignored. Errors carry the line where parsing stopped.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coord/errors.hpp"

namespace coord::topo::graphml {

struct RawNode {
  int id;
  std::optional<double> capacity;
  std::optional<bool> ingress;
};
struct RawLink {
  int a, b;
  std::optional<double> bandwidth;
  std::optional<double> delay;
};
struct RawGraph {
  std::string name;
  std::vector<RawNode> nodes;
  std::vector<RawLink> links;
};

namespace {

struct Tag {
  enum Kind { kOpen, kClose, kSelfClose } kind;
  std::string name;
  std::map<std::string, std::string> attrs;
  int line;
};

class Scanner {
 public:
  Scanner(std::string text, std::string file)
      : text_(std::move(text)), file_(std::move(file)) {}

  // next tag; intervening text is collected into *text_out when non-null
  std::optional<Tag> next(std::string* text_out = nullptr) {
    std::string text;
    while (pos_ < text_.size()) {
      if (text_[pos_] != '<') {
        if (text_[pos_] == '\n') ++line_;
        text.push_back(text_[pos_++]);
        continue;
      }
      if (match("<?")) {
        skip_until("?>");
        continue;
      }
      if (match("<!--")) {
        skip_until("-->");
        continue;
      }
      if (match("<!")) {  // doctype and friends
        skip_until(">");
        continue;
      }
      if (text_out) *text_out = decode(text);
      return read_tag();
    }
    if (text_out) *text_out = decode(text);
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& msg, int line = -1) const {
    throw ParseError(file_, line == -1 ? line_ : line, msg);
  }
  int line() const { return line_; }

 private:
  bool match(const char* prefix) {
    const size_t len = std::string(prefix).size();
    if (text_.compare(pos_, len, prefix) == 0) {
      advance(len);
      return true;
    }
    return false;
  }
  void advance(size_t n) {
    for (size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_)
      if (text_[pos_] == '\n') ++line_;
  }
  void skip_until(const char* marker) {
    const size_t at = text_.find(marker, pos_);
    if (at == std::string::npos) fail("unterminated markup");
    advance(at + std::string(marker).size() - pos_);
  }

  Tag read_tag() {
    Tag tag;
    tag.line = line_;
    ++pos_;  // past '<'
    tag.kind = Tag::kOpen;
    if (pos_ < text_.size() && text_[pos_] == '/') {
      tag.kind = Tag::kClose;
      ++pos_;
    }
    tag.name = read_name();
    if (tag.name.empty()) fail("expected tag name");
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated tag <" + tag.name);
      if (text_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (text_[pos_] == '/') {
        ++pos_;
        if (pos_ >= text_.size() || text_[pos_] != '>') fail("malformed self-closing tag");
        ++pos_;
        tag.kind = Tag::kSelfClose;
        break;
      }
      const std::string key = read_name();
      if (key.empty()) fail("expected attribute name in <" + tag.name + ">");
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != '=') fail("expected '=' after " + key);
      ++pos_;
      skip_space();
      if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\''))
        fail("expected quoted value for " + key);
      const char quote = text_[pos_++];
      const size_t end = text_.find(quote, pos_);
      if (end == std::string::npos) fail("unterminated attribute value for " + key);
      std::string value = text_.substr(pos_, end - pos_);
      advance(end + 1 - pos_);
      tag.attrs[key] = decode(value);
    }
    return tag;
  }

  std::string read_name() {
    std::string name;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.' || c == ':') {
        name.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    return name;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      advance(1);
  }

  static std::string decode(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size();) {
      if (s[i] != '&') {
        out.push_back(s[i++]);
        continue;
      }
      static const std::pair<const char*, char> kEntities[] = {
          {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
      bool matched = false;
      for (const auto& [pat, ch] : kEntities) {
        const size_t len = std::string(pat).size();
        if (s.compare(i, len, pat) == 0) {
          out.push_back(ch);
          i += len;
          matched = true;
          break;
        }
      }
      if (!matched) out.push_back(s[i++]);
    }
    return out;
  }

  std::string text_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
};

int parse_node_id(const std::string& raw, Scanner& sc, int line) {
  // accept "12" or "n12"
  size_t start = 0;
  if (!raw.empty() && (raw[0] == 'n' || raw[0] == 'N')) start = 1;
  if (start >= raw.size()) sc.fail("node id '" + raw + "' is not an integer", line);
  int value = 0;
  for (size_t i = start; i < raw.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(raw[i])))
      sc.fail("node id '" + raw + "' is not an integer", line);
    value = value * 10 + (raw[i] - '0');
  }
  return value;
}

double parse_double(const std::string& raw, Scanner& sc, int line, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(raw, &used);
    while (used < raw.size() && std::isspace(static_cast<unsigned char>(raw[used]))) ++used;
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    sc.fail("cannot parse " + what + " value '" + raw + "'", line);
  }
}

}  // namespace

RawGraph parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Scanner sc(buf.str(), path);

  RawGraph graph;
  std::map<std::string, std::string> key_names;  // key id -> attr.name
  bool saw_graphml = false, saw_graph = false;

  int current_node = -1;  // index into graph.nodes while inside <node>...</node>
  int current_link = -1;

  while (auto tag = sc.next()) {
    if (tag->kind == Tag::kClose) {
      if (tag->name == "node") current_node = -1;
      if (tag->name == "edge") current_link = -1;
      continue;
    }
    if (tag->name == "graphml") {
      saw_graphml = true;
    } else if (tag->name == "key") {
      if (tag->attrs.count("id") && tag->attrs.count("attr.name"))
        key_names[tag->attrs["id"]] = tag->attrs["attr.name"];
    } else if (tag->name == "graph") {
      saw_graph = true;
      if (auto it = tag->attrs.find("id"); it != tag->attrs.end()) graph.name = it->second;
      if (auto it = tag->attrs.find("edgedefault");
          it != tag->attrs.end() && it->second == "directed")
        sc.fail("only undirected graphs are supported", tag->line);
    } else if (tag->name == "node") {
      if (!tag->attrs.count("id")) sc.fail("<node> without id", tag->line);
      RawNode n{};
      n.id = parse_node_id(tag->attrs["id"], sc, tag->line);
      graph.nodes.push_back(n);
      current_link = -1;
      current_node =
          tag->kind == Tag::kSelfClose ? -1 : static_cast<int>(graph.nodes.size()) - 1;
    } else if (tag->name == "edge") {
      if (!tag->attrs.count("source") || !tag->attrs.count("target"))
        sc.fail("<edge> without source/target", tag->line);
      RawLink l{};
      l.a = parse_node_id(tag->attrs["source"], sc, tag->line);
      l.b = parse_node_id(tag->attrs["target"], sc, tag->line);
      graph.links.push_back(l);
      current_node = -1;
      current_link =
          tag->kind == Tag::kSelfClose ? -1 : static_cast<int>(graph.links.size()) - 1;
    } else if (tag->name == "data") {
      if (tag->kind == Tag::kSelfClose) continue;
      const int open_line = tag->line;
      std::string text;
      auto closing = sc.next(&text);
      if (!closing || closing->kind != Tag::kClose || closing->name != "data")
        sc.fail("<data> without closing tag", open_line);
      std::string attr;
      if (auto it = tag->attrs.find("key"); it != tag->attrs.end()) {
        auto named = key_names.find(it->second);
        // direct attribute names are accepted too
        attr = named != key_names.end() ? named->second : it->second;
      }
      // trim
      const auto first = text.find_first_not_of(" \t\r\n");
      const auto last = text.find_last_not_of(" \t\r\n");
      text = first == std::string::npos ? "" : text.substr(first, last - first + 1);
      if (current_node >= 0) {
        if (attr == "capacity")
          graph.nodes[current_node].capacity = parse_double(text, sc, open_line, "capacity");
      } else if (current_link >= 0) {
        if (attr == "bandwidth")
          graph.links[current_link].bandwidth = parse_double(text, sc, open_line, "bandwidth");
        else if (attr == "delay")
          graph.links[current_link].delay = parse_double(text, sc, open_line, "delay");
      }
    }
  }

  if (!saw_graphml || !saw_graph) sc.fail("not a GraphML document");
  return graph;
}

}  // namespace coord::topo::graphml
