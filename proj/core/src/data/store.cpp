#include "ppgbp/data/store.hpp"

#include <limits>

#include "ppgbp/common/bytes.hpp"
#include "ppgbp/common/error.hpp"

namespace ppgbp::data {

std::vector<std::uint8_t> encode_record(const SubjectRecord& r) {
  if (r.ppg.size() != r.abp.size())
    throw StructuralError("record " + std::to_string(r.subject_id) + ": PPG and ABP lengths differ");
  ByteWriter w;
  w.put_bytes("PPGR");
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint32_t>(r.subject_id);
  w.put<float>(r.fs);
  w.put<std::uint64_t>(r.ppg.size());
  w.put_floats(r.ppg);
  w.put_floats(r.abp);
  return std::move(w.bytes());
}

SubjectRecord decode_record(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "ingest record");
  if (r.get_string(4) != "PPGR") {
    ByteReader at_start(bytes, "ingest record");
    at_start.fail("bad magic, expected PPGR");
  }
  if (const auto v = r.get<std::uint16_t>(); v != kFormatVersion)
    r.fail("unsupported version " + std::to_string(v));
  SubjectRecord rec;
  rec.subject_id = r.get<std::uint32_t>();
  rec.fs = r.get<float>();
  if (!(rec.fs > 0.0f)) r.fail("sampling rate must be positive");
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining() / 8) r.fail("truncated, declared " + std::to_string(n) + " samples per channel");
  rec.ppg.resize(n);
  rec.abp.resize(n);
  r.get_floats(rec.ppg);
  r.get_floats(rec.abp);
  if (r.remaining() != 0) r.fail("trailing bytes after record");
  return rec;
}

void write_record(const SubjectRecord& record, const std::filesystem::path& path) {
  write_file(path, encode_record(record));
}

SubjectRecord read_record(const std::filesystem::path& path) {
  return decode_record(read_file(path));
}

std::vector<std::uint8_t> encode_store(std::span<const WindowSample> samples, std::uint32_t n_samp) {
  ByteWriter w;
  w.put_bytes("PPGW");
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint32_t>(n_samp);
  w.put<std::uint64_t>(samples.size());
  w.pad_to(kStoreHeaderBytes);
  for (const auto& s : samples) {
    if (s.ppg.size() != n_samp)
      throw StructuralError("sample store: window of subject " + std::to_string(s.subject_id) +
                            " has " + std::to_string(s.ppg.size()) + " values, expected " +
                            std::to_string(n_samp));
    w.put<std::uint32_t>(s.subject_id);
    w.put<std::uint32_t>(s.window_index);
    w.put<float>(s.sbp);
    w.put<float>(s.hr);
    w.put<float>(s.snr);
    w.put_floats(s.ppg);
  }
  return std::move(w.bytes());
}

std::vector<WindowSample> decode_store(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "sample store");
  if (r.get_string(4) != "PPGW") {
    ByteReader at_start(bytes, "sample store");
    at_start.fail("bad magic, expected PPGW");
  }
  if (const auto v = r.get<std::uint16_t>(); v != kFormatVersion)
    r.fail("unsupported version " + std::to_string(v));
  const auto n_samp = r.get<std::uint32_t>();
  const auto n_records = r.get<std::uint64_t>();
  r.skip(kStoreHeaderBytes - r.offset());
  const std::uint64_t record_bytes = 20 + 4ull * n_samp;
  if (n_records > r.remaining() / record_bytes)
    r.fail("truncated, header declares " + std::to_string(n_records) + " records");

  std::vector<WindowSample> out(n_records);
  for (auto& s : out) {
    s.subject_id = r.get<std::uint32_t>();
    s.window_index = r.get<std::uint32_t>();
    s.sbp = r.get<float>();
    s.hr = r.get<float>();
    s.snr = r.get<float>();
    s.ppg.resize(n_samp);
    r.get_floats(s.ppg);
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last record");
  return out;
}

void write_store(std::span<const WindowSample> samples, const std::filesystem::path& path,
                 std::uint32_t n_samp) {
  write_file(path, encode_store(samples, n_samp));
}

std::vector<WindowSample> read_store(const std::filesystem::path& path) {
  return decode_store(read_file(path));
}

}  // namespace ppgbp::data
