#include "hytrain/program_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hytrain/io_util.hpp"

namespace hytrain {
namespace {

const char* kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::NonNeg: return "nn";
    case ConeKind::Soc: return "soc";
    case ConeKind::Rsoc: return "rsoc";
  }
  return "?";
}

ConeKind kind_from(const std::string& s, int line_no) {
  if (s == "nn") return ConeKind::NonNeg;
  if (s == "soc") return ConeKind::Soc;
  if (s == "rsoc") return ConeKind::Rsoc;
  throw std::runtime_error("line " + std::to_string(line_no) + ": unknown cone kind '" + s + "'");
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}
  // Returns the next non-empty line, tracking line numbers for diagnostics.
  std::string next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw std::runtime_error(std::string("unexpected end of program text while reading ") + what);
  }
  int line_no() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

long expect_header(const std::string& line, const std::string& word, int line_no) {
  std::istringstream ss(line);
  std::string w;
  long count = -1;
  if (!(ss >> w >> count) || w != word || count < 0)
    throw std::runtime_error("line " + std::to_string(line_no) + ": expected '" + word + " <count>', got '" + line + "'");
  return count;
}

}  // namespace

std::string program_to_text(const ConicProgram& prog) {
  if (!prog.finalized()) throw std::logic_error("program_to_text: program not finalized");
  if (prog.equilibrated()) throw std::logic_error("program_to_text: refusing to export an equilibrated program");
  const auto& A = prog.matrix();
  std::ostringstream out;
  out << "socp 1\n";
  out << "vars " << prog.num_vars() << "\n";
  out << "constant " << format_sig12(prog.constant_term()) << "\n";

  long obj_nnz = 0;
  for (int j = 0; j < prog.num_vars(); ++j)
    if (prog.objective()[j] != 0.0) ++obj_nnz;
  out << "objective " << obj_nnz << "\n";
  for (int j = 0; j < prog.num_vars(); ++j)
    if (prog.objective()[j] != 0.0) out << j << " " << format_sig12(prog.objective()[j]) << "\n";

  out << "equalities " << prog.num_rows() << " " << A.nonZeros() << "\n";
  for (int j = 0; j < A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
      out << it.row() << " " << j << " " << format_sig12(it.value()) << "\n";

  out << "rhs " << prog.num_rows() << "\n";
  for (int i = 0; i < prog.num_rows(); ++i) out << format_sig12(prog.rhs()[i]) << "\n";

  out << "cones " << prog.cones().size() << "\n";
  for (const ConeSlice& s : prog.cones()) out << kind_name(s.kind) << " " << s.start << " " << s.len << "\n";

  out << "names " << prog.names().size() << "\n";
  for (const std::string& name : prog.names()) out << name << "\n";
  out << "end\n";
  return out.str();
}

void write_program(const ConicProgram& prog, const std::filesystem::path& path) {
  atomic_write_file(path, program_to_text(prog));
}

ConicProgram program_from_text(const std::string& text) {
  LineReader rd(text);
  {
    std::string magic = rd.next("header");
    if (magic != "socp 1")
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": expected 'socp 1', got '" + magic + "'");
  }
  ConicProgram prog;
  long n = expect_header(rd.next("vars"), "vars", rd.line_no());

  {
    std::string line = rd.next("constant");
    std::istringstream ss(line);
    std::string w, v;
    if (!(ss >> w >> v) || w != "constant")
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": expected 'constant <value>'");
    prog.set_constant_term(parse_double(v, "constant term"));
  }

  std::vector<double> obj(n, 0.0);
  long obj_nnz = expect_header(rd.next("objective"), "objective", rd.line_no());
  for (long k = 0; k < obj_nnz; ++k) {
    std::istringstream ss(rd.next("objective entry"));
    long j;
    std::string v;
    if (!(ss >> j >> v) || j < 0 || j >= n)
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": bad objective entry");
    obj[j] = parse_double(v, "objective entry");
  }

  long rows = 0, nnz = 0;
  {
    std::istringstream ss(rd.next("equalities"));
    std::string w;
    if (!(ss >> w >> rows >> nnz) || w != "equalities" || rows < 0 || nnz < 0)
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": expected 'equalities <rows> <nnz>'");
  }
  struct Entry {
    long r, c;
    double v;
  };
  std::vector<Entry> entries;
  entries.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    std::istringstream ss(rd.next("matrix entry"));
    long r, c;
    std::string v;
    if (!(ss >> r >> c >> v) || r < 0 || r >= rows || c < 0 || c >= n)
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": bad matrix entry");
    entries.push_back({r, c, parse_double(v, "matrix entry")});
  }

  long rhs_rows = expect_header(rd.next("rhs"), "rhs", rd.line_no());
  if (rhs_rows != rows)
    throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": rhs row count disagrees with equalities");
  std::vector<double> rhs(rows);
  for (long i = 0; i < rows; ++i) rhs[i] = parse_double(rd.next("rhs value"), "rhs value");

  long cone_count = expect_header(rd.next("cones"), "cones", rd.line_no());
  struct RawCone {
    ConeKind kind;
    long start, len;
  };
  std::vector<RawCone> raw_cones;
  for (long k = 0; k < cone_count; ++k) {
    std::istringstream ss(rd.next("cone"));
    std::string kind;
    long start, len;
    if (!(ss >> kind >> start >> len) || start < 0 || len <= 0 || start + len > n)
      throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": bad cone slice");
    raw_cones.push_back({kind_from(kind, rd.line_no()), start, len});
  }

  long name_count = expect_header(rd.next("names"), "names", rd.line_no());
  if (name_count != n)
    throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": name count disagrees with vars");
  for (long j = 0; j < n; ++j) prog.add_var(rd.next("name"));
  {
    std::string line = rd.next("end");
    if (line != "end") throw std::runtime_error("line " + std::to_string(rd.line_no()) + ": expected 'end'");
  }

  for (long j = 0; j < n; ++j)
    if (obj[j] != 0.0) prog.set_objective(static_cast<int>(j), obj[j]);
  for (long i = 0; i < rows; ++i) prog.add_row(rhs[i]);
  for (const Entry& e : entries) prog.add_entry(static_cast<int>(e.r), static_cast<int>(e.c), e.v);
  for (const RawCone& rc : raw_cones)
    prog.add_cone(rc.kind, static_cast<int>(rc.start), static_cast<int>(rc.len));
  prog.finalize();
  return prog;
}

ConicProgram read_program(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return program_from_text(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace hytrain
