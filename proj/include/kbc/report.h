#ifndef KBC_REPORT_H_
#define KBC_REPORT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kbc/eval.h"
#include "kbc/kb.h"
#include "kbc/training.h"

namespace kbc {

// Streaming JSON writer with two-space indentation. Metric values go through
// Fixed() and are printed with exactly four decimals; other numbers use the
// shortest round-trip form.
class JsonWriter {
 public:
  explicit JsonWriter(std::ostream& out) : out_(out) {}

  JsonWriter& BeginObject();
  JsonWriter& EndObject();
  JsonWriter& BeginArray();
  JsonWriter& EndArray();
  JsonWriter& Key(std::string_view key);
  JsonWriter& String(std::string_view value);
  JsonWriter& Fixed(double value, int decimals = 4);
  JsonWriter& Number(double value);
  JsonWriter& Int(std::int64_t value);
  JsonWriter& Uint(std::uint64_t value);
  JsonWriter& Bool(bool value);
  JsonWriter& Null();

 private:
  void BeforeValue();
  void Newline();

  struct Level {
    bool array = false;
    bool empty = true;
  };
  std::ostream& out_;
  std::vector<Level> stack_;
  bool after_key_ = false;
};

std::string FormatFixed(double value, int decimals = 4);
std::string FormatShortest(double value);
std::string JsonEscape(std::string_view s);

using EchoValue = std::variant<std::string, std::int64_t, double, bool>;
// Ordered key/value pairs echoed verbatim into reports and manifests.
using ConfigEcho = std::vector<std::pair<std::string, EchoValue>>;

struct NamedValue {
  std::string name;
  double value = 0.0;
};

struct RelationRow {
  std::string relation;
  std::size_t num_test = 0;
  std::vector<NamedValue> values;
};

struct MetricsReport {
  std::string protocol;  // "ER", "TC" or "PR"
  std::string model;
  std::string dataset;
  std::vector<std::size_t> ks;
  std::vector<NamedValue> metrics;
  std::vector<RelationRow> per_relation;
  ConfigEcho config;
};

MetricsReport ReportFromEr(const ErResult& result, const KnowledgeBase& kb);
MetricsReport ReportFromTc(const TcResult& result, const KnowledgeBase& kb);
MetricsReport ReportFromPr(const PrResult& result, const KnowledgeBase& kb);

void WriteReportJson(std::ostream& out, const MetricsReport& report);
// Rows are models; columns are "dataset/metric" in first-seen order.
void WriteReportTsv(std::ostream& out, const std::vector<MetricsReport>& reports);

// Header "K,hits_at_k,map_at_k", then one line per point.
void WriteCurveCsv(std::ostream& out, const std::vector<CurvePoint>& curve);

// One JSON object per line.
void WriteTrainLog(std::ostream& out, const std::vector<TrainLogEntry>& log);

void WriteGridJson(std::ostream& out, const GridResult& grid, ModelKind kind);

ConfigEcho EchoTrainConfig(const TrainConfig& config, ModelKind kind);

struct DatasetFile {
  std::string path;
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct PhaseTiming {
  std::string phase;
  double seconds = 0.0;
};

struct RunManifest {
  std::string command;
  ConfigEcho config;
  std::vector<DatasetFile> datasets;
  std::string software_version;
  std::vector<PhaseTiming> timings;
  std::vector<std::string> artifacts;
};

// Hex SHA-256 of a file's contents.
std::string Sha256File(const std::filesystem::path& path);
DatasetFile DescribeDatasetFile(const std::filesystem::path& path);

void WriteManifestJson(std::ostream& out, const RunManifest& manifest);

std::string SoftwareVersion();

}  // namespace kbc

#endif  // KBC_REPORT_H_
