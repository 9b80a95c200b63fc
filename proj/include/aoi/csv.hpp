#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aoi {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Comma-joined header line followed by rows written through `row`.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(unsigned long long v);
    CsvWriter& operator<<(std::string_view v);
    void end_row();

private:
    void sep();
    std::ostream& out_;
    std::size_t columns_;
    std::size_t pending_ = 0;
};

}  // namespace aoi
