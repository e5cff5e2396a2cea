#include "certbound/error.hpp"
#include "certbound/optimizer.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace certbound {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Lines {
 public:
  explicit Lines(std::string_view text) : in_(std::string(text)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++no_;
      if (!line.empty()) return true;
    }
    return false;
  }
  std::string expect() {
    std::string l;
    if (!next(l)) throw ParseError("unexpected end of report", no_ + 1, 1);
    return l;
  }
  // "key value" line with the given key; returns the value text
  std::string keyed(std::string_view key) {
    const std::string l = expect();
    if (l.compare(0, key.size(), key) != 0 || (l.size() > key.size() && l[key.size()] != ' '))
      throw error("expected '" + std::string(key) + "'");
    return l.size() > key.size() ? l.substr(key.size() + 1) : std::string();
  }
  ParseError error(const std::string& why) const { return ParseError(why, no_, 1); }

 private:
  std::istringstream in_;
  int no_ = 0;
};

double to_num(const Lines& lines, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw lines.error("malformed number '" + s + "'");
  return v;
}

unsigned long long to_uint(const Lines& lines, const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw lines.error("malformed integer '" + s + "'");
  return v;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> w;
  std::istringstream is(s);
  for (std::string t; is >> t;) w.push_back(t);
  return w;
}

BoxStatus parse_status(const Lines& lines, const std::string& s) {
  if (s == "proved") return BoxStatus::Proved;
  if (s == "split") return BoxStatus::Split;
  if (s == "unproved") return BoxStatus::Unproved;
  throw lines.error("unknown box status '" + s + "'");
}

}  // namespace

std::string format_report(const BoundReport& r, bool include_timing) {
  std::ostringstream o;
  const RunConfig& c = r.config;
  o << "certbound-report v1\n";
  o << "problem " << (r.problem.empty() ? "-" : r.problem) << '\n';
  o << "mode " << to_string(c.mode) << '\n';
  o << "order " << c.order << '\n';
  o << "max_boxes " << c.max_boxes << '\n';
  o << "template_threshold " << c.template_threshold << '\n';
  o << "control_points " << c.control_points << '\n';
  o << "tol " << num(c.tol) << '\n';
  o << "seed " << c.seed << '\n';
  o << "jobs " << c.jobs << '\n';
  o << "iteration_cap " << c.iteration_cap << '\n';
  o << "hessian_samples " << c.hessian_samples << '\n';
  o << "target " << (c.target ? num(*c.target) : "none") << '\n';
  o << "status " << r.status << '\n';
  o << "global_bound " << num(r.global_bound) << '\n';
  o << "global_upper " << num(r.global_upper) << '\n';
  o << "boxes " << r.box_count() << '\n';
  o << "leaves " << r.leaves().size() << '\n';
  o << "max_lifting " << r.max_lifting() << '\n';
  o << "max_control_points " << r.max_control_points() << '\n';
  if (include_timing) o << "time " << num(r.wall_seconds) << '\n';
  o << "# box id parent depth status lower upper iterations lifting\n";
  for (const auto& b : r.boxes) {
    o << "box " << b.id << ' ' << b.parent << ' ' << b.depth << ' ' << to_string(b.status) << ' ' << num(b.lower)
      << ' ' << num(b.upper) << ' ' << b.iterations << ' ' << b.lifting_count << '\n';
    o << "sides";
    for (const auto& s : b.box.sides()) o << ' ' << num(s.lo) << ' ' << num(s.hi);
    o << '\n';
    for (const auto& p : b.points) {
      o << "point";
      for (double v : p) o << ' ' << num(v);
      o << '\n';
    }
    o << "trace";
    for (double v : b.trace) o << ' ' << num(v);
    o << '\n';
    for (const auto& name : b.certificates) o << "cert " << name << '\n';
    if (!b.note.empty()) o << "note " << b.note << '\n';
    o << "endbox\n";
  }
  o << "end\n";
  return o.str();
}

BoundReport parse_report(std::string_view text) {
  Lines lines(text);
  if (lines.expect() != "certbound-report v1") throw lines.error("unknown report version");
  BoundReport r;
  RunConfig& c = r.config;
  r.problem = lines.keyed("problem");
  if (r.problem == "-") r.problem.clear();
  try {
    c.mode = parse_mode(lines.keyed("mode"));
  } catch (const Error& e) {
    throw lines.error(e.what());
  }
  c.order = static_cast<unsigned>(to_uint(lines, lines.keyed("order")));
  c.max_boxes = to_uint(lines, lines.keyed("max_boxes"));
  c.template_threshold = to_uint(lines, lines.keyed("template_threshold"));
  c.control_points = to_uint(lines, lines.keyed("control_points"));
  c.tol = to_num(lines, lines.keyed("tol"));
  c.seed = to_uint(lines, lines.keyed("seed"));
  c.jobs = static_cast<unsigned>(to_uint(lines, lines.keyed("jobs")));
  c.iteration_cap = static_cast<unsigned>(to_uint(lines, lines.keyed("iteration_cap")));
  c.hessian_samples = to_uint(lines, lines.keyed("hessian_samples"));
  const std::string target = lines.keyed("target");
  if (target != "none") c.target = to_num(lines, target);
  r.status = lines.keyed("status");
  r.proved = r.status == "proved";
  r.global_bound = to_num(lines, lines.keyed("global_bound"));
  r.global_upper = to_num(lines, lines.keyed("global_upper"));
  const auto boxes = to_uint(lines, lines.keyed("boxes"));
  const auto leaves = to_uint(lines, lines.keyed("leaves"));
  lines.keyed("max_lifting");
  lines.keyed("max_control_points");

  std::string line;
  while (lines.next(line)) {
    if (line == "end") break;
    if (line[0] == '#') continue;
    if (line.rfind("time ", 0) == 0) {
      r.wall_seconds = to_num(lines, line.substr(5));
      continue;
    }
    const auto head = split_words(line);
    if (head.size() != 9 || head[0] != "box") throw lines.error("expected a box record");
    BoxRecord b;
    b.id = to_uint(lines, head[1]);
    b.parent = to_uint(lines, head[2]);
    b.depth = static_cast<unsigned>(to_uint(lines, head[3]));
    b.status = parse_status(lines, head[4]);
    b.lower = to_num(lines, head[5]);
    b.upper = to_num(lines, head[6]);
    b.iterations = static_cast<unsigned>(to_uint(lines, head[7]));
    b.lifting_count = to_uint(lines, head[8]);
    const auto sides = split_words(lines.keyed("sides"));
    if (sides.size() % 2 != 0) throw lines.error("odd number of box bounds");
    std::vector<Interval> iv;
    for (std::size_t i = 0; i < sides.size(); i += 2) {
      const double lo = to_num(lines, sides[i]), hi = to_num(lines, sides[i + 1]);
      if (lo > hi) throw lines.error("box side with lo > hi");
      iv.emplace_back(lo, hi);
    }
    b.box = Box(std::move(iv));
    for (;;) {
      const std::string l = lines.expect();
      if (l == "endbox") break;
      const auto w = split_words(l);
      if (w[0] == "point") {
        std::vector<double> p;
        for (std::size_t i = 1; i < w.size(); ++i) p.push_back(to_num(lines, w[i]));
        b.points.push_back(std::move(p));
      } else if (w[0] == "trace") {
        for (std::size_t i = 1; i < w.size(); ++i) b.trace.push_back(to_num(lines, w[i]));
      } else if (w[0] == "cert" && w.size() == 2) {
        b.certificates.push_back(w[1]);
      } else if (w[0] == "note") {
        b.note = l.size() > 5 ? l.substr(5) : std::string();
      } else {
        throw lines.error("unknown box field '" + w[0] + "'");
      }
    }
    r.boxes.push_back(std::move(b));
  }
  if (line != "end") throw lines.error("missing 'end'");
  if (r.boxes.size() != boxes) throw lines.error("box count does not match the records");
  if (r.leaves().size() != leaves) throw lines.error("leaf count does not match the records");
  return r;
}

}  // namespace certbound
