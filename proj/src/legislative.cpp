#include "dyndp/legislative.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace dyndp {

namespace {

std::string describe(const LegislativeRecord& r) {
  return "record (congress " + std::to_string(r.congress) + ", " + r.state + ", " + r.party +
         ", member " + r.member + ", channel " + r.channel + ")";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

long parse_long(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::invalid_argument(where + ": expected an integer, got '" + s + "'");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& southern_states() {
  static const std::vector<std::string> states{"AL", "AR", "FL", "GA", "LA", "MS", "NC",
                                               "SC", "TN", "TX", "VA", "KY", "OK"};
  return states;
}

PanelDataset ingest_legislative(const std::vector<LegislativeRecord>& records,
                                const IngestOptions& options) {
  if (options.last_congress < options.first_congress) {
    throw std::invalid_argument("declared Congress range is empty");
  }
  const int n_periods = options.last_congress - options.first_congress + 1;

  using UnitKey = std::pair<std::string, std::string>;  // (state, party)
  std::set<UnitKey> units;
  // Per Congress: distinct roll calls / petitions, and whether speech and
  // bill channels were recorded at all.
  std::vector<std::set<std::string>> roll_calls(n_periods), petitions(n_periods);
  std::vector<bool> has_speech(n_periods, false), has_bills(n_periods, false);
  std::set<std::tuple<int, std::string, std::string, std::string>> seen_items;

  for (const auto& r : records) {
    if (r.party != "D" && r.party != "R") {
      throw std::invalid_argument(describe(r) + ": unknown party code '" + r.party + "'");
    }
    if (r.congress < options.first_congress || r.congress > options.last_congress) {
      throw std::invalid_argument(describe(r) + ": Congress outside the declared range " +
                                  std::to_string(options.first_congress) + ".." +
                                  std::to_string(options.last_congress));
    }
    if (r.value < 0) throw std::invalid_argument(describe(r) + ": negative value");
    if (r.state.empty() || r.member.empty()) {
      throw std::invalid_argument(describe(r) + ": missing state or member id");
    }
    const int t = r.congress - options.first_congress;
    if (r.channel == kRollCall || r.channel == kPetition) {
      if (r.item.empty()) throw std::invalid_argument(describe(r) + ": missing item id");
      if (r.value > 1) throw std::invalid_argument(describe(r) + ": binary value above 1");
      (r.channel == kRollCall ? roll_calls : petitions)[t].insert(r.item);
    } else if (r.channel == kSpeech) {
      if (r.value > 1) throw std::invalid_argument(describe(r) + ": binary value above 1");
      has_speech[t] = true;
    } else if (r.channel == kBillSponsorship) {
      has_bills[t] = true;
    } else if (r.channel != kSeat) {
      throw std::invalid_argument(describe(r) + ": unknown channel");
    }
    if (r.channel != kSeat &&
        !seen_items.emplace(r.congress, r.member, r.channel, r.item).second) {
      throw std::invalid_argument(describe(r) + ": duplicate record");
    }
    units.emplace(r.state, r.party);
  }
  if (units.empty()) throw std::invalid_argument("no legislative records");

  PanelDataset ds(units.size(), n_periods, {kRollCall, kPetition, kSpeech}, {kBillSponsorship});
  ds.attribute_names = {"state", "party"};
  if (!options.regions.empty()) ds.attribute_names.push_back("region");
  std::map<UnitKey, std::size_t> unit_index;
  std::size_t idx = 0;
  for (const auto& [state, party] : units) {
    ds.unit_ids[idx] = state + "-" + party;
    ds.unit_attributes[idx] = {state, party};
    if (!options.regions.empty()) {
      auto it = options.regions.find(state);
      if (it == options.regions.end()) {
        throw std::invalid_argument("state '" + state + "' missing from the region table");
      }
      ds.unit_attributes[idx].push_back(it->second);
    }
    unit_index[{state, party}] = idx++;
  }
  for (int t = 0; t < n_periods; ++t) ds.period_labels[t] = options.first_congress + t;

  Grid<std::set<std::string>> members(units.size(), n_periods);
  for (const auto& r : records) {
    const std::size_t i = unit_index.at({r.state, r.party});
    const std::size_t t = r.congress - options.first_congress;
    members(i, t).insert(r.member);
    auto& cell = ds.cells(i, t);
    if (r.channel == kRollCall) {
      cell.binary[0].successes += r.value;
    } else if (r.channel == kPetition) {
      cell.binary[1].successes += r.value;
    } else if (r.channel == kSpeech) {
      cell.binary[2].successes += r.value;
    } else if (r.channel == kBillSponsorship) {
      cell.counts[0].total += r.value;
      cell.counts[0].log_factorial_sum += std::lgamma(static_cast<double>(r.value) + 1.0);
    }
  }
  for (std::size_t i = 0; i < ds.n_units(); ++i) {
    for (int t = 0; t < n_periods; ++t) {
      const long seated = static_cast<long>(members(i, t).size());
      auto& cell = ds.cells(i, t);
      ds.present(i, t) = seated > 0 ? 1 : 0;
      cell.binary[0].trials = seated * static_cast<long>(roll_calls[t].size());
      cell.binary[1].trials = seated * static_cast<long>(petitions[t].size());
      cell.binary[2].trials = has_speech[t] ? seated : 0;
      cell.counts[0].exposures = has_bills[t] ? seated : 0;
    }
  }
  ds.validate();
  return ds;
}

std::vector<LegislativeRecord> read_legislative_records(std::istream& in,
                                                        const std::string& source) {
  static const std::vector<std::string> kHeader{"congress", "state",   "party", "member",
                                                "channel",  "item",    "value"};
  std::vector<LegislativeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    const std::string where = source + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (fields != kHeader) {
        throw std::invalid_argument(where +
                                    ": expected header congress,state,party,member,channel,"
                                    "item,value");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw std::invalid_argument(where + ": expected 7 fields, got " +
                                  std::to_string(fields.size()));
    }
    LegislativeRecord r;
    r.congress = static_cast<int>(parse_long(fields[0], where + " field congress"));
    r.state = fields[1];
    r.party = fields[2];
    r.member = fields[3];
    r.channel = fields[4];
    r.item = fields[5];
    r.value = parse_long(fields[6], where + " field value");
    out.push_back(std::move(r));
  }
  if (!header_seen) throw std::invalid_argument(source + ": empty record file");
  return out;
}

void write_legislative_records(std::ostream& out, const std::vector<LegislativeRecord>& records) {
  out << "congress,state,party,member,channel,item,value\n";
  for (const auto& r : records) {
    out << r.congress << ',' << r.state << ',' << r.party << ',' << r.member << ',' << r.channel
        << ',' << r.item << ',' << r.value << '\n';
  }
}

std::map<std::string, std::string> read_regions(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": expected two tab-separated fields (state, region)");
    }
    if (fields[0] == "state") continue;  // header
    out[fields[0]] = fields[1];
  }
  return out;
}

}  // namespace dyndp
