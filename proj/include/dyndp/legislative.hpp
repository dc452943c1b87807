#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "dyndp/panel_dataset.hpp"

// Member-level legislative activity records and their aggregation into
// (state, party) x Congress cells.

namespace dyndp {

inline constexpr const char* kRollCall = "roll_call";
inline constexpr const char* kPetition = "petition";
inline constexpr const char* kSpeech = "speech";
inline constexpr const char* kBillSponsorship = "bill_sponsorship";
/// Declares that a member held a seat; carries no data.
inline constexpr const char* kSeat = "seat";

struct LegislativeRecord {
  int congress = 0;
  std::string state;
  std::string party;  // "D" or "R"
  std::string member;
  std::string channel;
  std::string item;  // roll call / petition id; empty for other channels
  long value = 0;
};

struct IngestOptions {
  int first_congress = 73;
  int last_congress = 92;
  /// state -> region (e.g. "South"); adds a `region` attribute when given.
  std::map<std::string, std::string> regions;
};

/// One unit per (state, party), ordered by state then party. Roll calls and
/// petitions pool members x items, with absent votes counted as failures;
/// speech trials and bill exposures equal the seated member count whenever
/// the channel was recorded that Congress. A cell with no seated member is
/// marked absent. Throws std::invalid_argument naming the offending record.
PanelDataset ingest_legislative(const std::vector<LegislativeRecord>& records,
                                const IngestOptions& options = {});

/// CSV with header congress,state,party,member,channel,item,value.
std::vector<LegislativeRecord> read_legislative_records(std::istream& in,
                                                        const std::string& source = "<records>");
void write_legislative_records(std::ostream& out, const std::vector<LegislativeRecord>& records);

/// Two-column TSV: state, region. Lines starting with '#' are comments.
std::map<std::string, std::string> read_regions(std::istream& in,
                                                const std::string& source = "<regions>");

/// Southern states: the 11 former Confederate states plus Kentucky and
/// Oklahoma. Every other state is Northern.
const std::vector<std::string>& southern_states();

}  // namespace dyndp
