#pragma once

// Gateway side: beacon-driven health table and the two-phase download
// (bulk stream, then sequential NACK-driven send-and-wait recovery).

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "soilnet/channel.hpp"
#include "soilnet/level0.hpp"
#include "soilnet/mote_sim.hpp"
#include "soilnet/random.hpp"
#include "soilnet/record.hpp"

namespace soilnet {

struct MoteHealth {
  std::string mote_id;
  UtcSeconds last_seen{};
  std::uint16_t last_battery_adc = 0;
  std::uint32_t stored_records = 0;
  std::optional<std::uint64_t> highest_seq;
  std::uint32_t epoch = 0;
  std::deque<double> lqi_history;
  std::uint64_t beacons_received = 0;

  bool buffer_full() const { return stored_records >= kFlashCapacityRecords; }
};

/// One row per mote. Updates for a given mote must come from one writer.
class HealthTable {
 public:
  explicit HealthTable(std::size_t lqi_window = 32);

  const MoteHealth& handle_status(const StatusMessage& msg, double lqi, UtcSeconds received_at);
  const MoteHealth* find(const std::string& mote_id) const;
  const std::map<std::string, MoteHealth>& rows() const { return rows_; }
  std::size_t lqi_window() const { return window_; }

 private:
  std::size_t window_;
  std::map<std::string, MoteHealth> rows_;
};

struct DownloadPolicy {
  double status_timeout_s = 600;
  std::uint32_t max_retries_per_packet = 100;
  double packet_interval_s = 0.008;  // bulk streaming pace
  double round_trip_s = 0.03;        // one NACK plus its reply
  double reply_timeout_s = 0.1;      // wait before re-requesting
};

enum class DownloadPhase { bulk, send_and_wait, done, aborted };
std::string_view to_string(DownloadPhase phase);

struct DownloadStats {
  std::uint64_t packets_expected = 0;
  std::uint64_t packets_received_bulk = 0;
  std::uint64_t bulk_losses = 0;  // lost plus corrupted during bulk
  std::uint64_t retransmission_requests = 0;
  std::uint32_t max_retries_for_one_packet = 0;
  std::uint64_t duplicates_discarded = 0;
  double duration_s = 0;
};

/// Gateway bookkeeping for one transfer. Phases only move
/// bulk -> send_and_wait -> done, or to aborted.
class DownloadSession {
 public:
  DownloadSession(std::string mote_id, std::uint64_t since_seq, std::optional<std::uint64_t> high_seq);

  const std::string& mote_id() const { return mote_id_; }
  std::uint64_t since_seq() const { return since_; }
  /// One past the last expected sequence number.
  std::uint64_t end_seq() const { return end_; }
  DownloadPhase phase() const { return phase_; }
  const std::set<std::uint64_t>& holes() const { return holes_; }
  const std::map<std::uint64_t, SampleRecord>& received() const { return received_; }
  DownloadStats& stats() { return stats_; }
  const DownloadStats& stats() const { return stats_; }

  /// Returns false if the record duplicates one already held.
  bool accept(const SampleRecord& record);
  void end_bulk();
  void finish();
  void abort();

 private:
  void transition(DownloadPhase to);

  std::string mote_id_;
  std::uint64_t since_;
  std::uint64_t end_;
  DownloadPhase phase_ = DownloadPhase::bulk;
  std::set<std::uint64_t> holes_;
  std::map<std::uint64_t, SampleRecord> received_;
  DownloadStats stats_;
};

struct DownloadResult {
  std::vector<SampleRecord> records;  // gap-free when phase == done
  DownloadStats stats;
  DownloadPhase phase = DownloadPhase::done;
  std::set<std::uint64_t> unrecovered;  // holes left when aborted
  std::uint32_t epoch = 0;
  TimeAnchor anchor;                  // (mote clock, UTC) at completion
  std::vector<double> bulk_lqi;       // LQI of every frame that arrived during bulk
};

class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvictedError : public std::runtime_error {
 public:
  EvictedError(std::uint64_t since_seq, std::uint64_t tail_seq);
  std::uint64_t lost_records() const noexcept { return lost_; }

 private:
  std::uint64_t lost_;
};

/// Runs a complete download of [since_seq, highest_seq] from `mote`.
///
/// The gateway first listens for a status beacon (UnreachableError if none
/// arrives within policy.status_timeout_s), then requests the range, logs
/// holes for missing or corrupted frames, and recovers each hole with one
/// outstanding request at a time. A hole that exceeds
/// policy.max_retries_per_packet aborts the session; the result then
/// carries the partial records and phase == aborted. Radio time is charged
/// to the mote, and on success the mote's download cursor advances.
DownloadResult run_download(MoteSim& mote, std::uint64_t since_seq, const LinkModel& link, Rng& rng,
                            const DownloadPolicy& policy = {});

}  // namespace soilnet
