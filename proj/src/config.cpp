#include "ats/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "ats/dataset_io.hpp"

namespace ats {

// ---------------------------------------------------------------------------
// ConfigNode
// ---------------------------------------------------------------------------

ConfigNode ConfigNode::make_mapping() {
  ConfigNode n;
  n.kind_ = Kind::mapping;
  return n;
}

ConfigNode ConfigNode::make_sequence() {
  ConfigNode n;
  n.kind_ = Kind::sequence;
  return n;
}

ConfigNode ConfigNode::make_scalar(Scalar value) {
  ConfigNode n;
  n.kind_ = Kind::scalar;
  n.scalar_ = std::move(value);
  return n;
}

const ConfigNode* ConfigNode::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

ConfigNode& ConfigNode::insert(std::string key, ConfigNode value) {
  if (find(key) != nullptr) throw ConfigError("DuplicateKey", value.line(), "duplicate key '" + key + "'");
  entries_.emplace_back(std::move(key), std::move(value));
  return entries_.back().second;
}

bool operator==(const ConfigNode& a, const ConfigNode& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case ConfigNode::Kind::mapping: return a.entries_ == b.entries_;
    case ConfigNode::Kind::sequence: return a.items_ == b.items_;
    case ConfigNode::Kind::scalar: return a.scalar_ == b.scalar_;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Line {
  int number;
  int indent;
  std::string content;  // comment and trailing whitespace stripped
};

bool is_space(char c) { return c == ' ' || c == '\t'; }

// Cuts a `#` comment that starts the line or follows whitespace, ignoring
// `#` inside quoted scalars.
std::string strip_comment(const std::string& s, int line_no) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        if (quote == '\'' && i + 1 < s.size() && s[i + 1] == '\'') {
          ++i;
        } else {
          quote = 0;
        }
      }
      continue;
    }
    const bool token_start = i == 0 || is_space(s[i - 1]) || s[i - 1] == ':' || s[i - 1] == '-';
    if ((c == '"' || c == '\'') && token_start) {
      quote = c;
    } else if (c == '#' && (i == 0 || is_space(s[i - 1]))) {
      return s.substr(0, i);
    }
  }
  if (quote) throw ConfigError("SyntaxError", line_no, "unterminated quoted string");
  return s;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (is_space(s.back()) || s.back() == '\r')) s.pop_back();
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && (is_space(s.back()) || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<Line> scan_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string raw(text.substr(start, end - start));
    ++number;
    start = end + 1;

    std::size_t indent = 0;
    while (indent < raw.size() && (raw[indent] == ' ' || raw[indent] == '\t')) {
      if (raw[indent] == '\t') {
        // Tabs are fine on a line that is otherwise blank.
        if (trim(raw).empty()) break;
        throw ConfigError("TabIndent", number, "tab character in indentation");
      }
      ++indent;
    }
    std::string content = rtrim(strip_comment(raw.substr(std::min(indent, raw.size())), number));
    if (content.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (content == "---" || content == "..." || content.rfind("--- ", 0) == 0 || content.front() == '%') {
      throw ConfigError("UnsupportedSyntax", number, "document markers and directives are not supported");
    }
    if (indent % 2 != 0) {
      throw ConfigError("BadIndent", number, "indentation must be a multiple of 2 spaces");
    }
    lines.push_back({number, static_cast<int>(indent), std::move(content)});
    if (end == text.size()) break;
  }
  return lines;
}

bool is_seq_item(const std::string& content) {
  return content == "-" || (content.size() >= 2 && content[0] == '-' && content[1] == ' ');
}

// Position of the `:` ending a mapping key, or npos.
std::size_t key_colon(const std::string& content) {
  if (content.empty()) return std::string::npos;
  if (content.front() == '"' || content.front() == '\'') {
    const char q = content.front();
    std::size_t i = 1;
    for (; i < content.size(); ++i) {
      if (q == '"' && content[i] == '\\') {
        ++i;
      } else if (content[i] == q) {
        if (q == '\'' && i + 1 < content.size() && content[i + 1] == '\'') {
          ++i;
          continue;
        }
        break;
      }
    }
    const std::size_t colon = i + 1;
    if (colon < content.size() && content[colon] == ':' &&
        (colon + 1 == content.size() || content[colon + 1] == ' ')) {
      return colon;
    }
    return std::string::npos;
  }
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (content[i] == ':' && (i + 1 == content.size() || content[i + 1] == ' ')) return i;
  }
  return std::string::npos;
}

std::string unquote(const std::string& s, int line_no) {
  const char q = s.front();
  if (s.size() < 2 || s.back() != q) throw ConfigError("SyntaxError", line_no, "text after closing quote");
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const char c = s[i];
    if (q == '\'') {
      if (c == '\'') {
        if (i + 2 < s.size() && s[i + 1] == '\'') {
          out += '\'';
          ++i;
          continue;
        }
        throw ConfigError("SyntaxError", line_no, "text after closing quote");
      }
      out += c;
      continue;
    }
    if (c == '"') throw ConfigError("SyntaxError", line_no, "text after closing quote");
    if (c != '\\') {
      out += c;
      continue;
    }
    if (i + 2 >= s.size()) throw ConfigError("SyntaxError", line_no, "dangling escape");
    switch (s[++i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '0': out += '\0'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case '/': out += '/'; break;
      default: throw ConfigError("SyntaxError", line_no, std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

const std::regex& int_pattern() {
  static const std::regex re("[-+]?[0-9]+");
  return re;
}

const std::regex& real_pattern() {
  static const std::regex re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  return re;
}

Scalar plain_scalar(const std::string& s) {
  if (s == "null" || s == "Null" || s == "NULL" || s == "~") return Null{};
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (s == ".inf" || s == "+.inf") return std::numeric_limits<double>::infinity();
  if (s == "-.inf") return -std::numeric_limits<double>::infinity();
  if (s == ".nan") return std::numeric_limits<double>::quiet_NaN();
  if (std::regex_match(s, int_pattern())) {
    std::int64_t v = 0;
    const char* first = s.data() + (s.front() == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  if (std::regex_match(s, real_pattern())) {
    double v = 0.0;
    const char* first = s.data() + (s.front() == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  return s;
}

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  ConfigNode parse_document() {
    if (lines_.empty()) return ConfigNode::make_scalar(Null{});
    if (lines_.front().indent != 0) {
      throw ConfigError("BadIndent", lines_.front().number, "top level must not be indented");
    }
    ConfigNode root = parse_block(0);
    if (pos_ < lines_.size()) {
      throw ConfigError("BadIndent", lines_[pos_].number, "unexpected indentation");
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= lines_.size(); }
  const Line& cur() const { return lines_[pos_]; }

  ConfigNode parse_block(int indent) {
    if (is_seq_item(cur().content)) return parse_sequence(indent);
    if (key_colon(cur().content) != std::string::npos) return parse_mapping(indent);
    return parse_scalar_lines(cur().content, indent - 2);
  }

  ConfigNode parse_mapping(int indent) {
    ConfigNode map = ConfigNode::make_mapping();
    map.set_line(cur().number);
    while (!at_end() && cur().indent == indent) {
      const Line& line = cur();
      if (is_seq_item(line.content)) {
        throw ConfigError("SyntaxError", line.number, "sequence item where a mapping key was expected");
      }
      const auto colon = key_colon(line.content);
      if (colon == std::string::npos) {
        throw ConfigError("SyntaxError", line.number, "expected `key: value`");
      }
      std::string key = trim(line.content.substr(0, colon));
      if (!key.empty() && (key.front() == '"' || key.front() == '\'')) {
        key = unquote(key, line.number);
      } else {
        check_plain(key, line.number);
      }
      const int key_line = line.number;
      const std::string rest = trim(line.content.substr(colon + 1));
      ConfigNode value = rest.empty() ? parse_nested(indent, true) : parse_scalar_lines(rest, indent);
      if (value.line() == 0) value.set_line(key_line);
      try {
        map.insert(std::move(key), std::move(value));
      } catch (const ConfigError&) {
        throw ConfigError("DuplicateKey", key_line, "duplicate key '" + trim(line.content.substr(0, colon)) + "'");
      }
    }
    if (!at_end() && cur().indent > indent) {
      throw ConfigError("BadIndent", cur().number, "unexpected indentation");
    }
    return map;
  }

  ConfigNode parse_sequence(int indent) {
    ConfigNode seq = ConfigNode::make_sequence();
    seq.set_line(cur().number);
    while (!at_end() && cur().indent == indent && is_seq_item(cur().content)) {
      Line& line = lines_[pos_];
      const std::string rest = line.content.size() > 1 ? trim(line.content.substr(2)) : std::string();
      if (rest.empty()) {
        ConfigNode item = parse_nested(indent, false);
        if (item.line() == 0) item.set_line(line.number);
        seq.push_back(std::move(item));
      } else if (is_seq_item(rest) || key_colon(rest) != std::string::npos) {
        // `- key: v` and `- - x` open a collection aligned two columns in.
        line.indent = indent + 2;
        line.content = rest;
        seq.push_back(parse_block(indent + 2));
      } else {
        seq.push_back(parse_scalar_lines(rest, indent));
      }
    }
    if (!at_end() && cur().indent > indent) {
      throw ConfigError("BadIndent", cur().number, "unexpected indentation");
    }
    return seq;
  }

  // Value of `key:` or `-` with nothing after it on the same line.
  ConfigNode parse_nested(int indent, bool allow_same_indent_sequence) {
    const int line_no = cur().number;
    ++pos_;
    if (at_end()) return ConfigNode::make_scalar(Null{});
    const Line& next = cur();
    if (next.indent > indent) {
      const bool structural = is_seq_item(next.content) || key_colon(next.content) != std::string::npos;
      if (!structural) return parse_scalar_lines_from(indent);
      if (next.indent != indent + 2) {
        throw ConfigError("BadIndent", next.number, "nested block must be indented by exactly 2 spaces");
      }
      return parse_block(indent + 2);
    }
    if (allow_same_indent_sequence && next.indent == indent && is_seq_item(next.content)) {
      return parse_sequence(indent);
    }
    ConfigNode null_node = ConfigNode::make_scalar(Null{});
    null_node.set_line(line_no);
    return null_node;
  }

  // Inline scalar `first`, possibly continued by deeper plain lines.
  ConfigNode parse_scalar_lines(const std::string& first, int owner_indent) {
    const int line_no = cur().number;
    ++pos_;
    ConfigNode node;
    if (first.front() == '"' || first.front() == '\'') {
      node = ConfigNode::make_scalar(unquote(first, line_no));
    } else {
      check_plain(first, line_no);
      std::string text = first;
      bool continued = false;
      while (!at_end() && cur().indent > owner_indent && !is_seq_item(cur().content) &&
             key_colon(cur().content) == std::string::npos) {
        check_plain(cur().content, cur().number);
        text += ' ';
        text += cur().content;
        continued = true;
        ++pos_;
      }
      node = ConfigNode::make_scalar(continued ? Scalar(text) : plain_scalar(text));
    }
    node.set_line(line_no);
    return node;
  }

  // Multi-line plain scalar that starts on the line after its key.
  ConfigNode parse_scalar_lines_from(int owner_indent) {
    const int line_no = cur().number;
    std::vector<std::string> parts;
    while (!at_end() && cur().indent > owner_indent && !is_seq_item(cur().content) &&
           key_colon(cur().content) == std::string::npos) {
      const auto& content = cur().content;
      if (content.front() == '"' || content.front() == '\'') {
        if (!parts.empty()) throw ConfigError("SyntaxError", cur().number, "quoted text inside a plain scalar");
        ConfigNode node = ConfigNode::make_scalar(unquote(content, cur().number));
        node.set_line(line_no);
        ++pos_;
        return node;
      }
      check_plain(content, cur().number);
      parts.push_back(content);
      ++pos_;
    }
    if (!at_end() && cur().indent > owner_indent) {
      throw ConfigError("BadIndent", cur().number, "unexpected indentation");
    }
    std::string text;
    for (const auto& p : parts) {
      if (!text.empty()) text += ' ';
      text += p;
    }
    ConfigNode node = ConfigNode::make_scalar(parts.size() == 1 ? plain_scalar(text) : Scalar(text));
    node.set_line(line_no);
    return node;
  }

  static void check_plain(const std::string& s, int line_no) {
    if (s.empty()) return;
    switch (s.front()) {
      case '{':
      case '[': throw ConfigError("UnsupportedSyntax", line_no, "flow collections are not supported");
      case '&': throw ConfigError("UnsupportedSyntax", line_no, "anchors are not supported");
      case '*': throw ConfigError("UnsupportedSyntax", line_no, "aliases are not supported");
      case '!': throw ConfigError("UnsupportedSyntax", line_no, "tags are not supported");
      case '|':
      case '>': throw ConfigError("UnsupportedSyntax", line_no, "block scalars are not supported");
      case '?': throw ConfigError("UnsupportedSyntax", line_no, "complex keys are not supported");
      case '@':
      case '`': throw ConfigError("SyntaxError", line_no, "reserved indicator at start of scalar");
      default: break;
    }
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

ConfigNode parse_config(std::string_view text) {
  Parser parser(scan_lines(text));
  return parser.parse_document();
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\0': out += "\\0"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

bool plain_safe(const std::string& s) {
  if (s.empty() || s.front() == ' ' || s.back() == ' ') return false;
  if (std::string_view("-?:,[]{}#&*!|>'\"%@`").find(s.front()) != std::string_view::npos) return false;
  if (s.back() == ':') return false;
  for (char c : s) {
    if (c == '\n' || c == '\t' || c == '\r' || c == '\0') return false;
  }
  if (s.find(": ") != std::string::npos || s.find(" #") != std::string::npos) return false;
  if (s.find("  ") != std::string::npos) return false;
  return true;
}

std::string scalar_text(const Scalar& v) {
  struct Visitor {
    std::string operator()(Null) const { return "null"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      if (std::isnan(d)) return ".nan";
      if (std::isinf(d)) return d > 0 ? ".inf" : "-.inf";
      std::string s = format_double(d);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      return s;
    }
    std::string operator()(const std::string& s) const {
      if (plain_safe(s) && std::holds_alternative<std::string>(plain_scalar(s))) return s;
      return quote(s);
    }
  };
  return std::visit(Visitor{}, v);
}

std::string key_text(const std::string& k) { return plain_safe(k) ? k : quote(k); }

void emit(const ConfigNode& node, int indent, std::string& out);

void emit_child(const ConfigNode& value, int indent, std::string& out) {
  if (value.is_scalar()) {
    out += ' ';
    out += scalar_text(value.scalar());
    out += '\n';
  } else {
    out += '\n';
    emit(value, indent + 2, out);
  }
}

void emit(const ConfigNode& node, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (node.is_mapping()) {
    for (const auto& [k, v] : node.entries()) {
      out += pad + key_text(k) + ":";
      emit_child(v, indent, out);
    }
  } else if (node.is_sequence()) {
    for (const auto& item : node.items()) {
      if (item.is_scalar()) {
        out += pad + "- " + scalar_text(item.scalar()) + "\n";
      } else if (item.is_mapping() && !item.entries().empty()) {
        // First entry shares the dash line; the rest align two columns in.
        std::string nested;
        emit(item, indent + 2, nested);
        out += pad + "- " + nested.substr(static_cast<std::size_t>(indent) + 2);
      } else {
        out += pad + "-\n";
        emit(item, indent + 2, out);
      }
    }
  } else {
    out += pad + scalar_text(node.scalar()) + "\n";
  }
}

}  // namespace

std::string serialize_config(const ConfigNode& node) {
  std::string out;
  emit(node, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Binding
// ---------------------------------------------------------------------------

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ridge: return "ridge";
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::random_forest: return "random_forest";
  }
  return "?";
}

void check_task_learner(TaskKind task, LearnerKind learner) {
  const bool ok = learner == LearnerKind::random_forest ||
                  (task == TaskKind::regression && learner == LearnerKind::ridge) ||
                  (task == TaskKind::classification && learner == LearnerKind::logistic);
  if (!ok) {
    throw Error("TaskModelMismatch", "learner '" + std::string(to_string(learner)) + "' cannot serve a " +
                                         std::string(to_string(task)) + " task");
  }
}

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

// Typed view over a params mapping; rejects unknown keys on finish().
class Params {
 public:
  Params(const ConfigNode* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && node_->is_null()) node_ = nullptr;
    if (node_ && !node_->is_mapping()) bad(path_, "expected a mapping");
  }

  const ConfigNode* get(const std::string& key) {
    used_.push_back(key);
    if (!node_) return nullptr;
    const ConfigNode* v = node_->find(key);
    return (v && v->is_null()) ? nullptr : v;
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  std::optional<std::int64_t> integer(const std::string& key) {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    if (v->is_scalar()) {
      if (const auto* i = std::get_if<std::int64_t>(&v->scalar())) return *i;
    }
    bad(sub(key), "expected an integer", v);
  }

  std::optional<double> real(const std::string& key) {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    if (v->is_scalar()) {
      if (const auto* d = std::get_if<double>(&v->scalar())) return *d;
      if (const auto* i = std::get_if<std::int64_t>(&v->scalar())) return static_cast<double>(*i);
    }
    bad(sub(key), "expected a number", v);
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    if (v->is_scalar()) {
      if (const auto* b = std::get_if<bool>(&v->scalar())) return *b;
    }
    bad(sub(key), "expected true or false", v);
  }

  std::optional<std::string> string(const std::string& key) {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    if (v->is_scalar()) {
      if (const auto* s = std::get_if<std::string>(&v->scalar())) return *s;
    }
    bad(sub(key), "expected a string", v);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : node_->entries()) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
        bad(sub(k), "unknown parameter (valid: " + join(used_) + ")", &v);
      }
    }
  }

  [[noreturn]] static void bad(const std::string& path, const std::string& what, const ConfigNode* at = nullptr) {
    std::string where = path;
    if (at && at->line() > 0) where += " (line " + std::to_string(at->line()) + ")";
    throw Error("BadParam", where + ": " + what);
  }

 private:
  const ConfigNode* node_;
  std::string path_;
  std::vector<std::string> used_;
};

std::int64_t in_range(std::int64_t v, std::int64_t lo, std::int64_t hi, const std::string& path) {
  if (v < lo || v > hi) {
    Params::bad(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

constexpr std::int64_t kIntMax = std::numeric_limits<int>::max();

const ConfigNode& section(const ConfigNode& root, const char* name) {
  const ConfigNode* node = root.find(name);
  if (!node || node->is_null()) throw Error("MissingSection", std::string("MissingSection(") + name + ")");
  return *node;
}

struct TypedSection {
  std::string type;
  ConfigNode params;
};

TypedSection typed_section(const ConfigNode& node, const std::string& name) {
  if (!node.is_mapping()) Params::bad(name, "expected a mapping with `type` and `params`", &node);
  Params p(&node, name);
  auto type = p.string("type");
  if (!type) Params::bad(name + ".type", "missing");
  const ConfigNode* params = p.get("params");
  p.finish();
  return {*type, params ? *params : ConfigNode::make_mapping()};
}

std::optional<LabelSpec> label_spec_param(Params& p, const std::string& key) {
  const ConfigNode* node = p.get(key);
  if (!node) return std::nullopt;
  Params spec(node, p.sub(key));
  const auto lo = spec.integer("lo");
  const auto hi = spec.integer("hi");
  spec.finish();
  if (!lo || !hi) Params::bad(p.sub(key), "needs integer `lo` and `hi`", node);
  try {
    return LabelSpec(static_cast<int>(in_range(*lo, -kIntMax, kIntMax, p.sub(key) + ".lo")),
                     static_cast<int>(in_range(*hi, -kIntMax, kIntMax, p.sub(key) + ".hi")));
  } catch (const Error& e) {
    if (e.code() == "BadParam") throw;
    Params::bad(p.sub(key), e.message(), node);
  }
}

Tokenizer bind_tokenizer(const ConfigNode* node, const std::string& path) {
  Tokenizer tok;
  Params p(node, path);
  if (auto type = p.string("type")) {
    try {
      tok.kind = parse_tokenizer_kind(*type);
    } catch (const Error& e) {
      throw Error("UnknownType", path + ".type: " + e.message());
    }
  }
  tok.lowercase = p.boolean("lowercase").value_or(false);
  p.finish();
  return tok;
}

std::vector<FeatureConfig> bind_features(const ConfigNode* node, const std::string& path) {
  if (!node || node->is_null()) {
    return {{ExtractorKind::token_count, {}, {}},
            {ExtractorKind::avg_token_length, {}, {}},
            {ExtractorKind::unigram_likelihood, {}, {}}};
  }
  if (!node->is_sequence() || node->items().empty()) {
    Params::bad(path, "expected a non-empty list of {type, params}", node);
  }
  std::vector<FeatureConfig> out;
  for (std::size_t i = 0; i < node->items().size(); ++i) {
    const std::string item_path = path + "[" + std::to_string(i) + "]";
    const auto [type, params] = typed_section(node->items()[i], item_path);
    FeatureConfig fc;
    try {
      fc.kind = parse_extractor_kind(type);
    } catch (const Error& e) {
      throw Error("UnknownType", item_path + ".type: " + e.message());
    }
    Params p(&params, item_path + ".params");
    if (fc.kind == ExtractorKind::unigram_likelihood) fc.table_path = p.string("table_path");
    if (fc.kind == ExtractorKind::doc_embedding) {
      fc.vectors_path = p.string("vectors_path");
      if (!fc.vectors_path) Params::bad(item_path + ".params.vectors_path", "required for doc_embedding");
    }
    p.finish();
    out.push_back(std::move(fc));
  }
  return out;
}

LearnerConfig bind_learner(const ConfigNode* node, const std::string& path, TaskKind task, std::uint64_t seed) {
  LearnerConfig lc;
  lc.forest.seed = seed;
  lc.forest.mode = task == TaskKind::regression ? ForestMode::regression : ForestMode::classification;
  if (!node || node->is_null()) return lc;

  const auto [type, params] = typed_section(*node, path);
  if (type == "ridge") {
    lc.kind = LearnerKind::ridge;
  } else if (type == "logistic") {
    lc.kind = LearnerKind::logistic;
  } else if (type == "random_forest") {
    lc.kind = LearnerKind::random_forest;
  } else {
    throw Error("UnknownType", path + ".type: learner '" + type + "' (valid: ridge, logistic, random_forest)");
  }
  const std::string ppath = path + ".params";
  Params p(&params, ppath);
  switch (lc.kind) {
    case LearnerKind::ridge: {
      lc.lambda = p.real("lambda").value_or(lc.lambda);
      if (!(lc.lambda >= 0.0) || !std::isfinite(lc.lambda)) Params::bad(p.sub("lambda"), "must be >= 0");
      break;
    }
    case LearnerKind::logistic: {
      auto& h = lc.logistic;
      h.lr = p.real("lr").value_or(h.lr);
      if (auto e = p.integer("epochs")) h.epochs = static_cast<int>(in_range(*e, 0, kIntMax, p.sub("epochs")));
      h.l2 = p.real("l2").value_or(h.l2);
      if (!(h.lr > 0.0)) Params::bad(p.sub("lr"), "must be > 0");
      if (!(h.l2 >= 0.0)) Params::bad(p.sub("l2"), "must be >= 0");
      break;
    }
    case LearnerKind::random_forest: {
      auto& f = lc.forest;
      if (auto v = p.integer("n_estimators")) f.n_estimators = static_cast<int>(in_range(*v, 1, kIntMax, p.sub("n_estimators")));
      if (auto v = p.integer("max_depth")) f.max_depth = static_cast<int>(in_range(*v, 0, 64, p.sub("max_depth")));
      if (auto v = p.integer("min_samples_split")) {
        f.min_samples_split = static_cast<int>(in_range(*v, 2, kIntMax, p.sub("min_samples_split")));
      }
      if (auto v = p.integer("features_per_split")) {
        f.features_per_split = static_cast<int>(in_range(*v, 1, kIntMax, p.sub("features_per_split")));
      }
      if (auto v = p.integer("n_threads")) f.n_threads = static_cast<int>(in_range(*v, 0, 1024, p.sub("n_threads")));
      if (auto v = p.integer("seed")) f.seed = static_cast<std::uint64_t>(in_range(*v, 0, INT64_MAX, p.sub("seed")));
      f.bootstrap = p.boolean("bootstrap").value_or(true);
      break;
    }
  }
  p.finish();
  return lc;
}

}  // namespace

ExperimentConfig bind_experiment(const ConfigNode& root) {
  if (!root.is_mapping()) throw Error("BadParam", "configuration root must be a mapping");
  ExperimentConfig cfg;

  {
    Params top(&root, "config");
    top.get("task");
    top.get("profiler");
    top.get("dataset");
    top.finish();
  }

  const ConfigNode& task_node = section(root, "task");
  const auto* task_name = task_node.is_scalar() ? std::get_if<std::string>(&task_node.scalar()) : nullptr;
  if (!task_name) Params::bad("task", "expected 'regression' or 'classification'", &task_node);
  cfg.task = parse_task_kind(*task_name);

  // profiler
  {
    auto [type, params] = typed_section(section(root, "profiler"), "profiler");
    if (std::find(profiler_types().begin(), profiler_types().end(), type) == profiler_types().end()) {
      std::string msg = "profiler type '" + type + "' is not registered (valid: " + join(profiler_types()) + ")";
      std::string lower = type;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (lower.find("transformer") != std::string::npos || lower.find("bert") != std::string::npos) {
        msg += "; transformer-based profilers are out of scope for this toolkit";
      }
      throw Error("UnknownType", msg);
    }
    const TaskKind profiler_task = type == "FeatureRegressor" ? TaskKind::regression : TaskKind::classification;
    if (profiler_task != cfg.task) {
      throw Error("TaskModelMismatch", "profiler '" + type + "' does not match task '" +
                                           std::string(to_string(cfg.task)) + "'");
    }
    auto& pc = cfg.profiler;
    pc.type = type;
    pc.params = params;
    Params p(&params, "profiler.params");
    if (auto seed = p.integer("seed")) pc.seed = static_cast<std::uint64_t>(in_range(*seed, 0, INT64_MAX, p.sub("seed")));
    pc.tokenizer = bind_tokenizer(p.get("tokenizer"), p.sub("tokenizer"));
    pc.features = bind_features(p.get("features"), p.sub("features"));
    pc.learner = bind_learner(p.get("learner"), p.sub("learner"), cfg.task, pc.seed);
    pc.standardize = p.boolean("standardize").value_or(pc.learner.kind != LearnerKind::random_forest);
    pc.output_normalized = p.boolean("output_normalized").value_or(false);
    if (pc.output_normalized && cfg.task != TaskKind::regression) {
      Params::bad(p.sub("output_normalized"), "only applies to regression");
    }
    p.finish();
    check_task_learner(cfg.task, pc.learner.kind);
  }

  // dataset
  {
    auto [type, params] = typed_section(section(root, "dataset"), "dataset");
    if (std::find(dataset_types().begin(), dataset_types().end(), type) == dataset_types().end()) {
      throw Error("UnknownType", "dataset type '" + type + "' is not registered (valid: " + join(dataset_types()) + ")");
    }
    auto& dc = cfg.dataset;
    dc.type = type;
    dc.params = params;
    Params p(&params, "dataset.params");
    auto path = p.string("path");
    if (!path) Params::bad(p.sub("path"), "required");
    dc.path = *path;
    dc.label_spec = label_spec_param(p, "label_spec");
    if (type == "asap-aes") {
      auto prompt = p.integer("prompt_id");
      if (!prompt) Params::bad(p.sub("prompt_id"), "required for asap-aes");
      dc.prompt_id = static_cast<int>(in_range(*prompt, 1, 8, p.sub("prompt_id")));
    } else if (const ConfigNode* names = p.get("label_names")) {
      if (!names->is_sequence() || names->items().size() < 2) {
        Params::bad(p.sub("label_names"), "expected a list of at least two names", names);
      }
      for (const auto& item : names->items()) {
        const auto* s = item.is_scalar() ? std::get_if<std::string>(&item.scalar()) : nullptr;
        if (!s) Params::bad(p.sub("label_names"), "names must be strings", &item);
        dc.label_names.push_back(*s);
      }
    }
    dc.train_ratio = p.real("train_ratio");
    if (dc.train_ratio && !(*dc.train_ratio > 0.0 && *dc.train_ratio < 1.0)) {
      Params::bad(p.sub("train_ratio"), "must lie strictly between 0 and 1");
    }
    dc.split_seed = cfg.profiler.seed;
    if (auto s = p.integer("split_seed")) dc.split_seed = static_cast<std::uint64_t>(in_range(*s, 0, INT64_MAX, p.sub("split_seed")));
    p.finish();
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ExperimentConfig cfg = bind_experiment(parse_config(text));
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  cfg.source_text = text;
  return cfg;
}

}  // namespace ats
