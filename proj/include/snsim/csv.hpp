#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

// Plot-ready CSV artifacts: "#" metadata lines (version, config hash, seed),
// one header row, then %.17g values so reruns are byte-identical.

namespace snsim {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& version, std::uint64_t config_hash,
            std::uint64_t seed) {
    file_ = std::fopen(path.c_str(), "w");
    if (!file_) throw std::runtime_error("CsvWriter: cannot open " + path);
    std::fprintf(file_, "# snsim %s\n", version.c_str());
    std::fprintf(file_, "# config_hash=%016llx seed=%llu\n",
                 static_cast<unsigned long long>(config_hash),
                 static_cast<unsigned long long>(seed));
  }
  ~CsvWriter() {
    if (file_) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      std::fprintf(file_, "%s%s", i ? "," : "", columns[i].c_str());
    std::fprintf(file_, "\n");
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      std::fprintf(file_, "%s%.17g", i ? "," : "", values[i]);
    std::fprintf(file_, "\n");
  }

  void row_tagged(const std::string& tag, const std::vector<double>& values) {
    std::fprintf(file_, "%s", tag.c_str());
    for (double v : values) std::fprintf(file_, ",%.17g", v);
    std::fprintf(file_, "\n");
  }

 private:
  std::FILE* file_ = nullptr;
};

}  // namespace snsim
