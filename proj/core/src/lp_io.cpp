#include "mstl/milp.hpp"

#include <cctype>
#include <sstream>

namespace mstl::milp {

namespace {

bool legal_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::string sanitize(const std::string& raw, const char* prefix, int id) {
  if (raw.empty()) return std::string(prefix) + std::to_string(id);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) out += legal_name_char(c) ? c : '_';
  if (std::isdigit(static_cast<unsigned char>(out[0]))) out = std::string(prefix) + out;
  return out;
}

std::vector<std::string> unique_names(const MilpModel& model) {
  std::vector<std::string> names;
  names.reserve(model.vars.size());
  std::map<std::string, int> seen;
  for (int j = 0; j < model.num_vars(); ++j) {
    std::string n = sanitize(model.vars[static_cast<std::size_t>(j)].name, "v", j);
    auto [it, fresh] = seen.emplace(n, j);
    if (!fresh) n += "_" + std::to_string(j);
    seen.emplace(n, j);
    names.push_back(n);
  }
  return names;
}

void write_terms(std::ostringstream& out, const std::vector<RowEntry>& terms,
                 const std::vector<std::string>& names) {
  // Merge duplicate variables first so the text round-trips to an identical
  // constraint matrix.
  std::map<int, double> merged;
  for (const auto& t : terms) merged[t.var] += t.coef;
  bool first = true;
  for (const auto& [var, coef] : merged) {
    if (coef == 0.0) continue;
    if (first) {
      if (coef < 0) out << "- ";
      first = false;
    } else {
      out << (coef < 0 ? " - " : " + ");
    }
    double mag = std::abs(coef);
    if (mag != 1.0) out << format_double(mag) << " ";
    out << names[static_cast<std::size_t>(var)];
  }
  if (first) out << "0 " << names[0];
}

}  // namespace

std::string export_lp(const MilpModel& model) {
  model.validate();
  auto names = unique_names(model);
  std::ostringstream out;
  out << "\\ exported model: " << model.num_vars() << " vars, " << model.num_rows()
      << " rows\n";
  out << (model.obj_sense == ObjSense::Maximize ? "Maximize" : "Minimize") << "\n obj: ";
  write_terms(out, model.objective, names);
  out << "\nSubject To\n";
  std::map<std::string, int> row_seen;
  for (int i = 0; i < model.num_rows(); ++i) {
    const auto& r = model.rows[static_cast<std::size_t>(i)];
    std::string rn = sanitize(r.name, "c", i);
    if (!row_seen.emplace(rn, i).second) rn += "_" + std::to_string(i);
    out << " " << rn << ": ";
    write_terms(out, r.terms, names);
    switch (r.sense) {
      case RowSense::LE: out << " <= "; break;
      case RowSense::GE: out << " >= "; break;
      case RowSense::EQ: out << " = "; break;
    }
    out << format_double(r.rhs) << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < model.num_vars(); ++j) {
    const auto& v = model.vars[static_cast<std::size_t>(j)];
    if (v.kind == VarKind::Binary) continue;
    out << " " << format_double(v.lb) << " <= " << names[static_cast<std::size_t>(j)]
        << " <= " << format_double(v.ub) << "\n";
  }
  bool any_bin = false;
  for (const auto& v : model.vars)
    if (v.kind == VarKind::Binary) any_bin = true;
  if (any_bin) {
    out << "Binaries\n";
    int col = 0;
    for (int j = 0; j < model.num_vars(); ++j) {
      if (model.vars[static_cast<std::size_t>(j)].kind != VarKind::Binary) continue;
      out << " " << names[static_cast<std::size_t>(j)];
      if (++col % 8 == 0) out << "\n";
    }
    if (col % 8 != 0) out << "\n";
  }
  out << "End\n";
  return out.str();
}

namespace {

class LpLexer {
 public:
  explicit LpLexer(const std::string& text) : text_(text) {}

  // Tokens: names, numbers, operators (<=,>=,=,+,-,:).
  std::string next() {
    skip();
    if (pos_ >= text_.size()) return "";
    char c = text_[pos_];
    if (c == '<' || c == '>') {
      std::size_t start = pos_++;
      if (pos_ < text_.size() && text_[pos_] == '=') ++pos_;
      return text_.substr(start, pos_ - start) == "<" ? "<=" : text_.substr(start, pos_ - start);
    }
    if (c == '=' || c == '+' || c == '-' || c == ':') {
      ++pos_;
      return std::string(1, c);
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && (legal_name_char(text_[pos_]) || text_[pos_] == 'e' ||
                                   text_[pos_] == 'E'))
      ++pos_;
    // allow exponent signs inside numbers, e.g. 1e-06
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+') && pos_ > start &&
        (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E') &&
        std::isdigit(static_cast<unsigned char>(text_[start]))) {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
    if (pos_ == start) throw ParseError("unexpected character in LP file", pos_);
    return text_.substr(start, pos_ - start);
  }

  std::string peek() {
    std::size_t save = pos_;
    std::string t = next();
    pos_ = save;
    return t;
  }

  std::size_t position() const { return pos_; }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\\') {  // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

bool is_number(const std::string& t) {
  if (t.empty()) return false;
  char c = t[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

MilpModel parse_lp(const std::string& text) {
  LpLexer lex(text);
  MilpModel model;
  std::map<std::string, int> var_ids;
  auto var_of = [&](const std::string& name) {
    auto it = var_ids.find(name);
    if (it != var_ids.end()) return it->second;
    int id = model.add_continuous(0.0, std::numeric_limits<double>::infinity(), name);
    var_ids.emplace(name, id);
    return id;
  };

  std::string tok = lex.next();
  std::string head = lower(tok);
  if (head != "maximize" && head != "minimize" && head != "max" && head != "min")
    throw ParseError("LP file must start with Maximize/Minimize", lex.position());
  model.obj_sense =
      (head == "maximize" || head == "max") ? ObjSense::Maximize : ObjSense::Minimize;

  // objective: [name:] terms, then "subject"
  auto parse_terms = [&lex, &var_of](std::vector<RowEntry>& terms, std::string& stop_tok) {
    double sign = 1.0;
    double coef = 1.0;
    bool has_coef = false;
    while (true) {
      std::string t = lex.next();
      if (t.empty()) {
        stop_tok = t;
        return;
      }
      std::string lt = lower(t);
      if (t == "+") continue;
      if (t == "-") {
        sign = -sign;
        continue;
      }
      if (t == "<=" || t == ">=" || t == "=" || lt == "subject" || lt == "st" ||
          lt == "bounds" || lt == "binaries" || lt == "binary" || lt == "end" ||
          lt == "generals") {
        stop_tok = t;
        return;
      }
      if (is_number(t)) {
        coef = std::stod(t);
        has_coef = true;
        continue;
      }
      terms.push_back({var_of(t), sign * (has_coef ? coef : 1.0)});
      sign = 1.0;
      coef = 1.0;
      has_coef = false;
    }
  };

  // optional "obj:" label
  if (lex.peek() != "" && lower(lex.peek()) != "subject") {
    std::string maybe = lex.peek();
    // consume "name :" if present
    LpLexer probe = lex;
    std::string a = probe.next();
    if (probe.peek() == ":") {
      lex.next();
      lex.next();
    }
    (void)a;
    (void)maybe;
  }
  std::string stop;
  std::vector<RowEntry> obj;
  parse_terms(obj, stop);
  model.objective = std::move(obj);
  std::string section = lower(stop);
  if (section == "subject") {
    std::string to = lex.next();
    if (lower(to) != "to") throw ParseError("expected 'Subject To'", lex.position());
  }

  // rows until Bounds/Binaries/End
  while (true) {
    std::string t = lex.peek();
    std::string lt = lower(t);
    if (t.empty() || lt == "bounds" || lt == "binaries" || lt == "binary" || lt == "end") {
      lex.next();
      section = lt;
      break;
    }
    // row: name ':' terms sense rhs
    std::string name = lex.next();
    if (lex.peek() == ":") {
      lex.next();
    } else {
      throw ParseError("row without name label", lex.position());
    }
    std::vector<RowEntry> terms;
    std::string sense_tok;
    parse_terms(terms, sense_tok);
    RowSense sense;
    if (sense_tok == "<=")
      sense = RowSense::LE;
    else if (sense_tok == ">=")
      sense = RowSense::GE;
    else if (sense_tok == "=")
      sense = RowSense::EQ;
    else
      throw ParseError("expected row sense", lex.position());
    std::string rhs_tok = lex.next();
    double sign = 1.0;
    if (rhs_tok == "-") {
      sign = -1.0;
      rhs_tok = lex.next();
    }
    if (!is_number(rhs_tok)) throw ParseError("expected numeric rhs", lex.position());
    model.add_row(std::move(terms), sense, sign * std::stod(rhs_tok), name);
  }

  while (section == "bounds") {
    std::string t = lex.peek();
    std::string lt = lower(t);
    if (t.empty() || lt == "binaries" || lt == "binary" || lt == "end") {
      lex.next();
      section = lt;
      break;
    }
    // form: lb <= name <= ub
    std::string a = lex.next();
    double neg = 1.0;
    if (a == "-") {
      neg = -1.0;
      a = lex.next();
    }
    if (!is_number(a)) throw ParseError("expected bound value", lex.position());
    double lb = neg * std::stod(a);
    if (lex.next() != "<=") throw ParseError("expected '<=' in bound", lex.position());
    std::string name = lex.next();
    if (lex.next() != "<=") throw ParseError("expected '<=' in bound", lex.position());
    std::string b = lex.next();
    double neg2 = 1.0;
    if (b == "-") {
      neg2 = -1.0;
      b = lex.next();
    }
    if (!is_number(b)) throw ParseError("expected bound value", lex.position());
    int id = var_of(name);
    model.vars[static_cast<std::size_t>(id)].lb = lb;
    model.vars[static_cast<std::size_t>(id)].ub = neg2 * std::stod(b);
  }

  while (section == "binaries" || section == "binary") {
    std::string t = lex.next();
    if (t.empty() || lower(t) == "end") break;
    int id = var_of(t);
    auto& v = model.vars[static_cast<std::size_t>(id)];
    v.kind = VarKind::Binary;
    v.lb = 0.0;
    v.ub = 1.0;
  }
  return model;
}

std::map<std::string, double> parse_solution_file(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;
    double value;
    if (!(ls >> value))
      throw ParseError("solution line " + std::to_string(lineno) + " has no value",
                       static_cast<std::size_t>(lineno));
    out[name] = value;
  }
  return out;
}

std::vector<double> import_solution(const MilpModel& model, const std::string& text) {
  auto values = parse_solution_file(text);
  auto names = unique_names(model);
  std::vector<double> x(static_cast<std::size_t>(model.num_vars()), 0.0);
  for (int j = 0; j < model.num_vars(); ++j) {
    auto it = values.find(names[static_cast<std::size_t>(j)]);
    if (it == values.end())
      throw Error("solution file missing variable '" + names[static_cast<std::size_t>(j)] + "'");
    x[static_cast<std::size_t>(j)] = it->second;
  }
  return x;
}

std::string format_solution(const MilpModel& model, const std::vector<double>& x) {
  auto names = unique_names(model);
  std::ostringstream out;
  out << "# objective value follows variable lines\n";
  for (int j = 0; j < model.num_vars(); ++j)
    out << names[static_cast<std::size_t>(j)] << " "
        << format_double(x[static_cast<std::size_t>(j)]) << "\n";
  return out.str();
}

}  // namespace mstl::milp
