#include "kbc/report.h"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "kbc/error.h"

#ifndef KBC_VERSION
#define KBC_VERSION "0.0.0"
#endif

namespace kbc {

std::string FormatFixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s(buf);
  // Avoid "-0.0000" for tiny negative values.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

std::string FormatShortest(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string JsonEscape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

void JsonWriter::Newline() {
  out_ << '\n' << std::string(2 * stack_.size(), ' ');
}

void JsonWriter::BeforeValue() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  Level& top = stack_.back();
  if (!top.empty) out_ << ',';
  top.empty = false;
  Newline();
}

JsonWriter& JsonWriter::BeginObject() {
  BeforeValue();
  out_ << '{';
  stack_.push_back({false, true});
  return *this;
}

JsonWriter& JsonWriter::EndObject() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) Newline();
  out_ << '}';
  return *this;
}

JsonWriter& JsonWriter::BeginArray() {
  BeforeValue();
  out_ << '[';
  stack_.push_back({true, true});
  return *this;
}

JsonWriter& JsonWriter::EndArray() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) Newline();
  out_ << ']';
  return *this;
}

JsonWriter& JsonWriter::Key(std::string_view key) {
  Level& top = stack_.back();
  if (!top.empty) out_ << ',';
  top.empty = false;
  Newline();
  out_ << '"' << JsonEscape(key) << "\": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::String(std::string_view value) {
  BeforeValue();
  out_ << '"' << JsonEscape(value) << '"';
  return *this;
}

JsonWriter& JsonWriter::Fixed(double value, int decimals) {
  if (!std::isfinite(value)) return Null();
  BeforeValue();
  out_ << FormatFixed(value, decimals);
  return *this;
}

JsonWriter& JsonWriter::Number(double value) {
  if (!std::isfinite(value)) return Null();
  BeforeValue();
  out_ << FormatShortest(value);
  return *this;
}

JsonWriter& JsonWriter::Int(std::int64_t value) {
  BeforeValue();
  out_ << value;
  return *this;
}

JsonWriter& JsonWriter::Uint(std::uint64_t value) {
  BeforeValue();
  out_ << value;
  return *this;
}

JsonWriter& JsonWriter::Bool(bool value) {
  BeforeValue();
  out_ << (value ? "true" : "false");
  return *this;
}

JsonWriter& JsonWriter::Null() {
  BeforeValue();
  out_ << "null";
  return *this;
}

namespace {

void WriteEcho(JsonWriter& w, const ConfigEcho& echo) {
  w.BeginObject();
  for (const auto& [key, value] : echo) {
    w.Key(key);
    std::visit(
        [&w](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::string>) {
            w.String(v);
          } else if constexpr (std::is_same_v<T, std::int64_t>) {
            w.Int(v);
          } else if constexpr (std::is_same_v<T, double>) {
            w.Number(v);
          } else {
            w.Bool(v);
          }
        },
        value);
  }
  w.EndObject();
}

std::string HitsName(std::size_t k) { return "hits_at_" + std::to_string(k); }

}  // namespace

MetricsReport ReportFromEr(const ErResult& result, const KnowledgeBase& kb) {
  MetricsReport r;
  r.protocol = "ER";
  r.ks = result.ks;
  r.metrics.push_back({"mrr", result.mrr});
  for (std::size_t i = 0; i < result.ks.size(); ++i) {
    r.metrics.push_back({HitsName(result.ks[i]), result.hits[i]});
  }
  struct Acc {
    double rr = 0.0;
    std::vector<std::size_t> hits;
    std::size_t questions = 0;
  };
  std::map<RelationId, Acc> per;
  for (const ErTripleRanks& t : result.ranks) {
    Acc& a = per[t.triple.relation];
    a.hits.resize(result.ks.size(), 0);
    for (std::size_t rank : {t.subject_rank, t.object_rank}) {
      a.rr += 1.0 / static_cast<double>(rank);
      for (std::size_t i = 0; i < result.ks.size(); ++i) {
        if (rank <= result.ks[i]) ++a.hits[i];
      }
    }
    a.questions += 2;
  }
  for (const ErRelationCounts& c : result.per_relation) {
    RelationRow row;
    row.relation = kb.vocab().relations.Name(c.relation);
    row.num_test = c.questions_from;
    const Acc& a = per[c.relation];
    const double q = static_cast<double>(std::max<std::size_t>(a.questions, 1));
    row.values.push_back({"mrr", a.rr / q});
    for (std::size_t i = 0; i < result.ks.size(); ++i) {
      const double h = a.hits.empty() ? 0.0 : static_cast<double>(a.hits[i]);
      row.values.push_back({HitsName(result.ks[i]), h / q});
    }
    r.per_relation.push_back(std::move(row));
  }
  return r;
}

MetricsReport ReportFromTc(const TcResult& result, const KnowledgeBase& kb) {
  MetricsReport r;
  r.protocol = "TC";
  r.metrics.push_back({"accuracy", result.accuracy});
  for (RelationId k = 0; k < result.per_relation_accuracy.size(); ++k) {
    const double acc = result.per_relation_accuracy[k];
    if (std::isnan(acc)) continue;
    RelationRow row;
    row.relation = kb.vocab().relations.Name(k);
    row.num_test = kb.by_relation(Split::kTest, k).size();
    row.values.push_back({"accuracy", acc});
    r.per_relation.push_back(std::move(row));
  }
  return r;
}

MetricsReport ReportFromPr(const PrResult& result, const KnowledgeBase& kb) {
  MetricsReport r;
  r.protocol = "PR";
  r.ks = {result.k};
  const std::string k = std::to_string(result.k);
  r.metrics.push_back({"map_at_" + k, result.map});
  r.metrics.push_back({"hits_at_" + k, result.hits});
  for (const PrRelation& rel : result.per_relation) {
    RelationRow row;
    row.relation = kb.vocab().relations.Name(rel.relation);
    row.num_test = rel.num_relevant;
    row.values.push_back({"ap_at_" + k, rel.ap});
    row.values.push_back({"hits_at_" + k, rel.hits});
    row.values.push_back({"weight", rel.weight});
    r.per_relation.push_back(std::move(row));
  }
  return r;
}

void WriteReportJson(std::ostream& out, const MetricsReport& report) {
  JsonWriter w(out);
  w.BeginObject();
  w.Key("protocol").String(report.protocol);
  w.Key("model").String(report.model);
  w.Key("dataset").String(report.dataset);
  w.Key("K").BeginArray();
  for (std::size_t k : report.ks) w.Uint(k);
  w.EndArray();
  w.Key("metrics").BeginObject();
  for (const NamedValue& m : report.metrics) w.Key(m.name).Fixed(m.value);
  w.EndObject();
  w.Key("per_relation").BeginArray();
  for (const RelationRow& row : report.per_relation) {
    w.BeginObject();
    w.Key("relation").String(row.relation);
    w.Key("num_test").Uint(row.num_test);
    for (const NamedValue& v : row.values) w.Key(v.name).Fixed(v.value);
    w.EndObject();
  }
  w.EndArray();
  w.Key("config");
  WriteEcho(w, report.config);
  w.EndObject();
  out << '\n';
}

void WriteReportTsv(std::ostream& out,
                    const std::vector<MetricsReport>& reports) {
  std::vector<std::string> columns;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const MetricsReport& r : reports) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) {
      models.push_back(r.model);
    }
    for (const NamedValue& m : r.metrics) {
      const std::string col = r.dataset + "/" + r.protocol + "/" + m.name;
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) {
        columns.push_back(col);
      }
      cells[{r.model, col}] = m.value;
    }
  }
  out << "model";
  for (const std::string& c : columns) out << '\t' << c;
  out << '\n';
  for (const std::string& m : models) {
    out << m;
    for (const std::string& c : columns) {
      auto it = cells.find({m, c});
      out << '\t' << (it == cells.end() ? "-" : FormatFixed(it->second));
    }
    out << '\n';
  }
}

void WriteCurveCsv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "K,hits_at_k,map_at_k\n";
  for (const CurvePoint& p : curve) {
    out << p.k << ',' << FormatFixed(p.hits) << ',' << FormatFixed(p.map)
        << '\n';
  }
}

void WriteTrainLog(std::ostream& out, const std::vector<TrainLogEntry>& log) {
  for (const TrainLogEntry& e : log) {
    out << "{\"epoch\": " << e.epoch << ", \"loss\": " << FormatFixed(e.loss, 6)
        << ", \"metric\": "
        << (e.metric ? FormatFixed(*e.metric) : std::string("null")) << "}\n";
  }
}

ConfigEcho EchoTrainConfig(const TrainConfig& c, ModelKind kind) {
  ConfigEcho echo;
  echo.emplace_back("model", std::string(ModelKindName(kind)));
  echo.emplace_back("dim", static_cast<std::int64_t>(c.dim));
  echo.emplace_back("lr", c.learning_rate);
  echo.emplace_back("l2", c.l2);
  echo.emplace_back("margin", c.margin);
  echo.emplace_back("sampling", std::string(SamplingStrategyName(c.strategy)));
  echo.emplace_back("negatives", static_cast<std::int64_t>(c.negatives));
  echo.emplace_back("epochs", static_cast<std::int64_t>(c.max_epochs));
  echo.emplace_back("eval_every", static_cast<std::int64_t>(c.eval_every));
  echo.emplace_back("loss", std::string(LossKindName(c.LossFor(kind))));
  echo.emplace_back("init_scale", c.init_scale);
  if (kind == ModelKind::kTransE) {
    echo.emplace_back("norm", std::string(c.norm == Norm::kL1 ? "l1" : "l2"));
  }
  if (kind == ModelKind::kComplEx) {
    echo.emplace_back("conjugate_object", c.conjugate_object);
  }
  echo.emplace_back("seed", static_cast<std::int64_t>(c.seed));
  return echo;
}

void WriteGridJson(std::ostream& out, const GridResult& grid, ModelKind kind) {
  JsonWriter w(out);
  w.BeginObject();
  w.Key("model").String(ModelKindName(kind));
  w.Key("best_index").Uint(grid.best_index);
  w.Key("best_metric").Fixed(grid.best_metric);
  w.Key("cells").BeginArray();
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& cell = grid.cells[i];
    w.BeginObject();
    w.Key("index").Uint(i);
    w.Key("config");
    WriteEcho(w, EchoTrainConfig(cell.config, kind));
    w.Key("metric");
    if (cell.metric) {
      w.Fixed(*cell.metric);
    } else {
      w.Null();
    }
    if (!cell.error.empty()) w.Key("error").String(cell.error);
    w.EndObject();
  }
  w.EndArray();
  w.EndObject();
  out << '\n';
}

std::string Sha256File(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

DatasetFile DescribeDatasetFile(const std::filesystem::path& path) {
  return {path.string(), Sha256File(path), std::filesystem::file_size(path)};
}

void WriteManifestJson(std::ostream& out, const RunManifest& m) {
  JsonWriter w(out);
  w.BeginObject();
  w.Key("command").String(m.command);
  w.Key("config");
  WriteEcho(w, m.config);
  w.Key("datasets").BeginArray();
  for (const DatasetFile& d : m.datasets) {
    w.BeginObject();
    w.Key("path").String(d.path);
    w.Key("sha256").String(d.sha256);
    w.Key("bytes").Uint(d.bytes);
    w.EndObject();
  }
  w.EndArray();
  w.Key("software_version").String(m.software_version);
  w.Key("timings").BeginArray();
  for (const PhaseTiming& t : m.timings) {
    w.BeginObject();
    w.Key("phase").String(t.phase);
    w.Key("seconds").Fixed(t.seconds, 3);
    w.EndObject();
  }
  w.EndArray();
  w.Key("artifacts").BeginArray();
  for (const std::string& a : m.artifacts) w.String(a);
  w.EndArray();
  w.EndObject();
  out << '\n';
}

std::string SoftwareVersion() { return KBC_VERSION; }

}  // namespace kbc
