#pragma once

// Result tables with deterministic field order and shortest round-trip
// float formatting, plus CSV read/write.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace adhesion {

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);
std::string format_int(long long x);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  class RowBuilder {
   public:
    explicit RowBuilder(Table& t) : table_(t) {}
    RowBuilder& num(double x) { cells_.push_back(format_double(x)); return *this; }
    RowBuilder& integer(long long x) { cells_.push_back(format_int(x)); return *this; }
    RowBuilder& text(std::string s) { cells_.push_back(std::move(s)); return *this; }
    ~RowBuilder();

   private:
    Table& table_;
    std::vector<std::string> cells_;
  };

  RowBuilder row() { return RowBuilder(*this); }
};

void write_csv(const Table& table, std::ostream& out);
void write_csv_file(const Table& table, const std::string& path);
Table read_csv(std::istream& in, const std::string& name = "");
Table read_csv_file(const std::string& path);

}  // namespace adhesion
