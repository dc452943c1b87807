#include "dyndp/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace dyndp {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void require_plain(const std::string& text, const char* what) {
  if (text.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  if (text.find_first_of("\t\n\r") != std::string::npos) {
    throw std::invalid_argument(std::string(what) + " '" + text +
                                "' contains a tab or line break");
  }
}

/// Reads non-blank lines and tracks their numbers for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("#provenance\t", 0) == 0) continue;
      if (!line.empty()) return true;
    }
    return false;
  }

  std::string expect(const char* what) {
    std::string line;
    if (!next(line)) {
      fail(line_no_ == 0 ? std::string("file is empty")
                         : std::string("unexpected end of file, expected ") + what);
    }
    return line;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(source_, line_no_, what);
  }

  std::string where() const { return source_ + ":" + std::to_string(line_no_); }

  void expect_magic(const std::string& kind, int version) {
    const auto fields = split(expect("format line"), '\t');
    if (fields.size() != 2 || fields[0] != "#dyndp-" + kind) {
      fail("not a dyndp " + kind + " file (expected '#dyndp-" + kind + "<TAB>version')");
    }
    if (fields[1] != std::to_string(version)) {
      fail("unsupported " + kind + " format version '" + fields[1] + "'");
    }
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

std::string provenance_line(const std::string& provenance) {
  return "#provenance\t" + provenance + "\n";
}

std::string encode_matrix(const Grid<int>& g, int offset) {
  std::string out;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    if (i) out += ';';
    for (std::size_t t = 0; t < g.cols(); ++t) {
      if (t) out += ',';
      out += std::to_string(g(i, t) + offset);
    }
  }
  return out;
}

template <class T>
Grid<T> decode_matrix(const std::string& text, std::size_t rows, std::size_t cols, int offset,
                      const std::string& where) {
  const auto units = split(text, ';');
  if (units.size() != rows) {
    throw std::invalid_argument(where + ": expected " + std::to_string(rows) + " units, got " +
                                std::to_string(units.size()));
  }
  Grid<T> out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto values = split(units[i], ',');
    if (values.size() != cols) {
      throw std::invalid_argument(where + ": unit " + std::to_string(i + 1) + " has " +
                                  std::to_string(values.size()) + " periods, expected " +
                                  std::to_string(cols));
    }
    for (std::size_t t = 0; t < cols; ++t) {
      out(i, t) = static_cast<T>(parse_long(values[t], where) - offset);
    }
  }
  return out;
}

std::string encode_doubles(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  for (double x : xs) parts.push_back(format_double(x));
  return join(parts, ',');
}

std::vector<double> decode_doubles(const std::string& text, const std::string& where) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, where));
  return out;
}

}  // namespace

FormatError::FormatError(const std::string& located_message)
    : std::runtime_error(located_message) {}

FormatError::FormatError(const std::string& source, const std::string& what)
    : std::runtime_error(source + ": " + what) {}

FormatError::FormatError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what) {}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(where + ": expected a number, got '" + text + "'");
  }
  return x;
}

long parse_long(const std::string& text, const std::string& where) {
  long x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(where + ": expected an integer, got '" + text + "'");
  }
  return x;
}

void write_panel(std::ostream& out, const PanelDataset& dataset, const std::string& provenance) {
  dataset.validate();
  for (const auto& id : dataset.unit_ids) require_plain(id, "unit id");
  for (const auto& name : dataset.attribute_names) require_plain(name, "attribute name");
  for (const auto& row : dataset.unit_attributes) {
    for (const auto& v : row) {
      if (v.find_first_of("\t\n\r") != std::string::npos) {
        throw std::invalid_argument("attribute value '" + v + "' contains a tab or line break");
      }
    }
  }
  for (const auto& c : dataset.binary_channels) require_plain(c, "channel name");
  for (const auto& c : dataset.count_channels) require_plain(c, "channel name");

  out << "#dyndp-panel\t1\n";
  if (!provenance.empty()) out << provenance_line(provenance);
  out << "[units]\nunit";
  for (const auto& a : dataset.attribute_names) out << '\t' << a;
  out << '\n';
  for (std::size_t i = 0; i < dataset.n_units(); ++i) {
    out << dataset.unit_ids[i];
    for (const auto& v : dataset.unit_attributes[i]) out << '\t' << v;
    out << '\n';
  }
  out << "[periods]\n";
  for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
    out << (t ? "\t" : "") << dataset.period_labels[t];
  }
  out << "\n[cells]\nunit\tperiod\tpresent";
  for (const auto& c : dataset.binary_channels) out << '\t' << c << ":s\t" << c << ":n";
  for (const auto& c : dataset.count_channels) {
    out << '\t' << c << ":total\t" << c << ":exposures\t" << c << ":log_factorial_sum";
  }
  out << '\n';
  for (std::size_t i = 0; i < dataset.n_units(); ++i) {
    for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
      const auto& cell = dataset.cells(i, t);
      out << dataset.unit_ids[i] << '\t' << dataset.period_labels[t] << '\t'
          << int{dataset.present(i, t)};
      for (const auto& b : cell.binary) out << '\t' << b.successes << '\t' << b.trials;
      for (const auto& c : cell.counts) {
        out << '\t' << c.total << '\t' << c.exposures << '\t'
            << format_double(c.log_factorial_sum);
      }
      out << '\n';
    }
  }
}

namespace {

PanelDataset read_panel_unchecked(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  reader.expect_magic("panel", 1);
  if (reader.expect("[units]") != "[units]") reader.fail("expected [units]");
  auto header = split(reader.expect("unit header"), '\t');
  if (header.front() != "unit") reader.fail("unit header must start with 'unit'");

  PanelDataset ds;
  ds.attribute_names.assign(header.begin() + 1, header.end());
  std::string line;
  while (true) {
    line = reader.expect("[periods]");
    if (line == "[periods]") break;
    auto fields = split(line, '\t');
    if (fields.size() != header.size()) {
      reader.fail("unit row has " + std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(header.size()));
    }
    ds.unit_ids.push_back(fields[0]);
    ds.unit_attributes.emplace_back(fields.begin() + 1, fields.end());
  }
  for (const auto& f : split(reader.expect("period labels"), '\t')) {
    ds.period_labels.push_back(static_cast<int>(parse_long(f, reader.where())));
  }
  if (reader.expect("[cells]") != "[cells]") reader.fail("expected [cells]");

  // Column layout from the cell header.
  const auto cell_header = split(reader.expect("cell header"), '\t');
  if (cell_header.size() < 3 || cell_header[0] != "unit" || cell_header[1] != "period" ||
      cell_header[2] != "present") {
    reader.fail("cell header must start with unit, period, present");
  }
  std::size_t col = 3;
  auto channel_of = [&](std::size_t c, const std::string& suffix) -> std::optional<std::string> {
    if (c >= cell_header.size()) return std::nullopt;
    const auto& name = cell_header[c];
    if (name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      return std::nullopt;
    }
    return name.substr(0, name.size() - suffix.size());
  };
  while (auto ch = channel_of(col, ":s")) {
    if (channel_of(col + 1, ":n") != ch) reader.fail("column '" + *ch + ":s' needs '" + *ch + ":n' next");
    ds.binary_channels.push_back(*ch);
    col += 2;
  }
  while (auto ch = channel_of(col, ":total")) {
    if (channel_of(col + 1, ":exposures") != ch || channel_of(col + 2, ":log_factorial_sum") != ch) {
      reader.fail("column '" + *ch + ":total' needs ':exposures' and ':log_factorial_sum' next");
    }
    ds.count_channels.push_back(*ch);
    col += 3;
  }
  if (col != cell_header.size()) reader.fail("unrecognized cell column '" + cell_header[col] + "'");

  const std::size_t n = ds.unit_ids.size();
  const std::size_t periods = ds.period_labels.size();
  if (n == 0 || periods == 0) reader.fail("panel has no units or no periods");
  std::map<std::string, std::size_t> unit_of;
  for (std::size_t i = 0; i < n; ++i) {
    if (!unit_of.emplace(ds.unit_ids[i], i).second) reader.fail("duplicate unit '" + ds.unit_ids[i] + "'");
  }
  std::map<int, std::size_t> period_of;
  for (std::size_t t = 0; t < periods; ++t) {
    if (!period_of.emplace(ds.period_labels[t], t).second) reader.fail("duplicate period label");
  }
  CellObservations blank;
  blank.binary.resize(ds.binary_channels.size());
  blank.counts.resize(ds.count_channels.size());
  ds.cells = Grid<CellObservations>(n, periods, blank);
  ds.present = Grid<std::uint8_t>(n, periods, 0);
  Grid<std::uint8_t> seen(n, periods, 0);

  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != cell_header.size()) {
      reader.fail("cell row has " + std::to_string(f.size()) + " fields, expected " +
                  std::to_string(cell_header.size()));
    }
    const auto where = reader.where();
    auto u = unit_of.find(f[0]);
    if (u == unit_of.end()) reader.fail("unknown unit '" + f[0] + "'");
    auto p = period_of.find(static_cast<int>(parse_long(f[1], where)));
    if (p == period_of.end()) reader.fail("unknown period '" + f[1] + "'");
    const std::size_t i = u->second;
    const std::size_t t = p->second;
    if (seen(i, t)) reader.fail("duplicate cell (" + f[0] + ", " + f[1] + ")");
    seen(i, t) = 1;
    const long present = parse_long(f[2], where);
    if (present != 0 && present != 1) reader.fail("present must be 0 or 1");
    ds.present(i, t) = static_cast<std::uint8_t>(present);
    auto& cell = ds.cells(i, t);
    std::size_t c = 3;
    auto next_long = [&] {
      const std::size_t k = c++;
      return parse_long(f[k], where + " column " + cell_header[k]);
    };
    for (auto& b : cell.binary) {
      b.successes = next_long();
      b.trials = next_long();
    }
    for (auto& k : cell.counts) {
      k.total = next_long();
      k.exposures = next_long();
      k.log_factorial_sum = parse_double(f[c], where + " column " + cell_header[c]);
      ++c;
    }
    try {
      cell.validate();
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < periods; ++t) {
      if (!seen(i, t)) {
        throw FormatError(source, "missing cell (" + ds.unit_ids[i] + ", " +
                                         std::to_string(ds.period_labels[t]) +
                                         "); write it with present = 0 if it is empty");
      }
    }
  }
  try {
    ds.validate();
  } catch (const std::exception& e) {
    throw FormatError(source, e.what());
  }
  return ds;
}

}  // namespace

PanelDataset read_panel(std::istream& in, const std::string& source) {
  try {
    return read_panel_unchecked(in, source);
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void write_truth(std::ostream& out, const SimulationTruth& truth, const PanelDataset& dataset,
                 const std::string& provenance) {
  const auto& g = truth.memberships;
  if (g.rows() != dataset.n_units() || g.cols() != dataset.n_periods()) {
    throw std::invalid_argument("truth memberships do not match the dataset");
  }
  out << "#dyndp-truth\t1\n";
  if (!provenance.empty()) out << provenance_line(provenance);
  out << "regime\t" << truth.regime << "\ngroups\t" << truth.n_groups
      << "\nitems\t" << truth.n_items << '\n';
  if (truth.stickiness) out << "stickiness\t" << format_double(*truth.stickiness) << '\n';
  out << "[memberships]\nunit";
  for (int label : dataset.period_labels) out << '\t' << label;
  out << '\n';
  for (std::size_t i = 0; i < g.rows(); ++i) {
    out << dataset.unit_ids[i];
    for (std::size_t t = 0; t < g.cols(); ++t) out << '\t' << g(i, t) + 1;
    out << '\n';
  }
  out << "[theta]\nperiod\tgroup\titem\ttheta\n";
  if (!truth.theta.empty()) {
    for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
      for (int k = 0; k < truth.n_groups; ++k) {
        for (int j = 0; j < truth.n_items; ++j) {
          out << dataset.period_labels[t] << '\t' << k + 1 << '\t' << j + 1 << '\t'
              << format_double(truth.theta_at(k, j, t)) << '\n';
        }
      }
    }
  }
  out << "[cluster_params]\ncluster\ttheta\tlambda\n";
  for (std::size_t k = 0; k < truth.cluster_params.size(); ++k) {
    out << k + 1 << '\t' << encode_doubles(truth.cluster_params[k].theta) << '\t'
        << encode_doubles(truth.cluster_params[k].lambda) << '\n';
  }
}

namespace {

SimulationTruth read_truth_unchecked(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  reader.expect_magic("truth", 1);
  SimulationTruth truth;
  std::string line;
  auto key_value = [&](const std::string& key) {
    const auto f = split(reader.expect(key.c_str()), '\t');
    if (f.size() != 2 || f[0] != key) reader.fail("expected '" + key + "<TAB>value'");
    return f[1];
  };
  truth.regime = key_value("regime");
  truth.n_groups = static_cast<int>(parse_long(key_value("groups"), reader.where()));
  truth.n_items = static_cast<int>(parse_long(key_value("items"), reader.where()));
  line = reader.expect("[memberships]");
  if (line.rfind("stickiness\t", 0) == 0) {
    truth.stickiness = parse_double(line.substr(11), reader.where());
    line = reader.expect("[memberships]");
  }
  if (line != "[memberships]") reader.fail("expected [memberships]");
  const auto header = split(reader.expect("membership header"), '\t');
  const std::size_t periods = header.size() - 1;
  std::vector<std::vector<int>> rows;
  while ((line = reader.expect("[theta]")) != "[theta]") {
    const auto f = split(line, '\t');
    if (f.size() != header.size()) reader.fail("membership row has the wrong number of fields");
    std::vector<int> row;
    for (std::size_t t = 1; t < f.size(); ++t) {
      row.push_back(static_cast<int>(parse_long(f[t], reader.where())) - 1);
    }
    rows.push_back(std::move(row));
  }
  truth.memberships = Grid<int>(rows.size(), periods);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < periods; ++t) truth.memberships(i, t) = rows[i][t];
  }
  reader.expect("theta header");
  while ((line = reader.expect("[cluster_params]")) != "[cluster_params]") {
    const auto f = split(line, '\t');
    if (f.size() != 4) reader.fail("theta row needs 4 fields");
    truth.theta.push_back(parse_double(f[3], reader.where()));
  }
  if (!truth.theta.empty() &&
      truth.theta.size() != periods * truth.n_groups * truth.n_items) {
    reader.fail("theta table has the wrong number of rows");
  }
  reader.expect("cluster header");
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 3) reader.fail("cluster row needs 3 fields");
    truth.cluster_params.push_back(
        {decode_doubles(f[1], reader.where()), decode_doubles(f[2], reader.where())});
  }
  return truth;
}

}  // namespace

SimulationTruth read_truth(std::istream& in, const std::string& source) {
  try {
    return read_truth_unchecked(in, source);
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

DrawWriter::DrawWriter(std::ostream& out, const DrawFileHeader& h) : out_(out) {
  if (h.config_json.find('\n') != std::string::npos) {
    throw std::invalid_argument("config echo must be a single line");
  }
  out_ << "#dyndp-draws\t" << kDrawFormatVersion << "\n#seed\t" << h.seed << "\n#chain\t"
       << h.chain << "\n#config_hash\t" << h.config_hash << "\n#config\t" << h.config_json
       << "\n#units\t" << h.n_units << "\n#periods\t" << h.n_periods << "\n#truncation\t"
       << h.truncation << "\n#binary\t" << join(h.binary_channels, ',') << "\n#count\t"
       << join(h.count_channels, ',') << "\niteration\tp\tlog_joint\tg\td\tparams\n";
  out_.flush();
}

void DrawWriter::write(const Draw& draw) {
  Grid<int> d(draw.d.rows(), draw.d.cols());
  for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] = draw.d.data()[i];
  std::vector<std::string> params;
  for (const auto& [k, cp] : draw.occupied_params) {
    params.push_back(std::to_string(k + 1) + ":" + encode_doubles(cp.theta) + "|" +
                     encode_doubles(cp.lambda));
  }
  out_ << draw.iteration << '\t' << format_double(draw.p) << '\t'
       << format_double(draw.log_joint) << '\t' << encode_matrix(draw.g, 1) << '\t'
       << encode_matrix(d, 0) << '\t' << join(params, ';') << '\n';
  out_.flush();
}

namespace {

DrawFile read_draws_unchecked(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  reader.expect_magic("draws", kDrawFormatVersion);
  DrawFile file;
  auto& h = file.header;
  auto key_value = [&](const std::string& key) {
    const auto line = reader.expect(key.c_str());
    const std::string prefix = "#" + key + "\t";
    if (line.rfind(prefix, 0) != 0) reader.fail("expected '" + prefix + "...'");
    return line.substr(prefix.size());
  };
  auto names = [](const std::string& s) {
    return s.empty() ? std::vector<std::string>{} : split(s, ',');
  };
  h.seed = std::stoull(key_value("seed"));
  h.chain = static_cast<int>(parse_long(key_value("chain"), reader.where()));
  h.config_hash = key_value("config_hash");
  h.config_json = key_value("config");
  h.n_units = static_cast<std::size_t>(parse_long(key_value("units"), reader.where()));
  h.n_periods = static_cast<std::size_t>(parse_long(key_value("periods"), reader.where()));
  h.truncation = static_cast<int>(parse_long(key_value("truncation"), reader.where()));
  h.binary_channels = names(key_value("binary"));
  h.count_channels = names(key_value("count"));
  if (reader.expect("column header") != "iteration\tp\tlog_joint\tg\td\tparams") {
    reader.fail("unexpected draw column header");
  }

  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 6) reader.fail("draw row needs 6 fields, got " + std::to_string(f.size()));
    const auto where = reader.where();
    Draw draw;
    draw.iteration = static_cast<int>(parse_long(f[0], where));
    draw.p = parse_double(f[1], where);
    draw.log_joint = parse_double(f[2], where);
    try {
      draw.g = decode_matrix<int>(f[3], h.n_units, h.n_periods, 1, where + " field g");
      draw.d = decode_matrix<std::uint8_t>(f[4], h.n_units, h.n_periods, 0, where + " field d");
    } catch (const std::invalid_argument& e) {
      throw FormatError(source, e.what());
    }
    for (int k : draw.g.data()) {
      if (k < 0 || k >= h.truncation) reader.fail("label outside 1.." + std::to_string(h.truncation));
    }
    if (!f[5].empty()) {
      for (const auto& entry : split(f[5], ';')) {
        const auto colon = entry.find(':');
        const auto bar = entry.find('|');
        if (colon == std::string::npos || bar == std::string::npos || bar < colon) {
          reader.fail("malformed cluster parameters '" + entry + "'");
        }
        ClusterParams cp{decode_doubles(entry.substr(colon + 1, bar - colon - 1), where),
                         decode_doubles(entry.substr(bar + 1), where)};
        if (cp.theta.size() != h.binary_channels.size() ||
            cp.lambda.size() != h.count_channels.size()) {
          reader.fail("cluster parameters do not match the channel layout");
        }
        draw.occupied_params.emplace_back(
            static_cast<int>(parse_long(entry.substr(0, colon), where)) - 1, std::move(cp));
      }
    }
    file.draws.push_back(std::move(draw));
  }
  return file;
}

}  // namespace

DrawFile read_draws(std::istream& in, const std::string& source) {
  try {
    return read_draws_unchecked(in, source);
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void write_trace(std::ostream& out, const std::vector<SweepTrace>& trace,
                 const std::string& config_hash, std::uint64_t seed) {
  out << provenance_line("config_hash=" + config_hash + " seed=" + std::to_string(seed))
      << "iteration\tlog_joint\tp\toccupied\tmax_label\n";
  for (const auto& s : trace) {
    out << s.iteration << '\t' << format_double(s.log_joint) << '\t' << format_double(s.p)
        << '\t' << s.occupied << '\t' << s.max_label + 1 << '\n';
  }
}

void write_change_matrix(std::ostream& out, const Grid<double>& change,
                         const PanelDataset& dataset, const std::string& provenance) {
  out << provenance_line(provenance) << "unit";
  for (int label : dataset.period_labels) out << '\t' << label;
  out << '\n';
  for (std::size_t i = 0; i < change.rows(); ++i) {
    out << dataset.unit_ids[i];
    for (std::size_t t = 0; t < change.cols(); ++t) {
      out << '\t';
      if (t > 0) out << format_double(change(i, t));
    }
    out << '\n';
  }
}

void write_cocluster_table(std::ostream& out, const LabelDraws& draws,
                           const PanelDataset& dataset, const std::string& provenance) {
  out << provenance_line(provenance) << "period\tunit_a\tunit_b\tprobability\n";
  const std::size_t n = dataset.n_units();
  for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
    std::vector<CellRef> cells;
    std::vector<std::size_t> units;
    for (std::size_t i = 0; i < n; ++i) {
      if (dataset.present(i, t)) {
        cells.push_back({i, t});
        units.push_back(i);
      }
    }
    const auto m = cocluster_matrix(draws, cells);
    for (std::size_t a = 0; a < cells.size(); ++a) {
      for (std::size_t b = a + 1; b < cells.size(); ++b) {
        out << dataset.period_labels[t] << '\t' << dataset.unit_ids[units[a]] << '\t'
            << dataset.unit_ids[units[b]] << '\t' << format_double(m(a, b)) << '\n';
      }
    }
  }
}

void write_series(std::ostream& out, const SummarySeries& series, const PanelDataset& dataset,
                  const std::string& provenance) {
  out << provenance_line(provenance) << "period\testimate\tlower\tupper\tn_pairs\n";
  for (const auto& pt : series.points) {
    out << dataset.period_labels.at(pt.period) << '\t' << format_double(pt.estimate) << '\t'
        << format_double(pt.lower) << '\t' << format_double(pt.upper) << '\t' << pt.n_pairs
        << '\n';
  }
}

void write_assignments(std::ostream& out, const std::vector<Grid<int>>& samples,
                       const std::string& provenance) {
  out << provenance_line(provenance) << "sample\tg\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    out << s + 1 << '\t' << encode_matrix(samples[s], 1) << '\n';
  }
}

std::ostream& OutputSet::add(const std::string& name) {
  for (const auto& [existing, _] : files_) {
    if (existing == name) throw std::logic_error("output '" + name + "' staged twice");
  }
  files_.emplace_back(name, std::make_unique<std::ostringstream>());
  return *files_.back().second;
}

void OutputSet::commit() {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> temps;
  try {
    for (const auto& [name, content] : files_) {
      const auto tmp = dir_ / (name + ".tmp");
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + tmp.string());
      temps.push_back(tmp);
      f << content->str();
      f.close();
      if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
  } catch (...) {
    for (const auto& t : temps) std::filesystem::remove(t);
    throw;
  }
  for (std::size_t i = 0; i < files_.size(); ++i) {
    std::filesystem::rename(temps[i], dir_ / files_[i].first);
  }
  files_.clear();
}

}  // namespace dyndp
