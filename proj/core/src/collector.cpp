#include "soilnet/collector.hpp"

#include <algorithm>
#include <cmath>

namespace soilnet {

HealthTable::HealthTable(std::size_t lqi_window) : window_(lqi_window) {
  if (window_ == 0) throw std::invalid_argument("LQI window must hold at least one value");
}

const MoteHealth& HealthTable::handle_status(const StatusMessage& msg, double lqi, UtcSeconds received_at) {
  auto [it, inserted] = rows_.try_emplace(msg.mote_id);
  MoteHealth& h = it->second;
  if (inserted) {
    h.mote_id = msg.mote_id;
    h.last_seen = received_at;
  }
  h.last_seen = std::max(h.last_seen, received_at);
  h.last_battery_adc = msg.battery_adc;
  h.stored_records = msg.stored_records;
  h.highest_seq = msg.highest_seq;
  h.epoch = msg.epoch;
  h.lqi_history.push_back(lqi);
  while (h.lqi_history.size() > window_) h.lqi_history.pop_front();
  ++h.beacons_received;
  return h;
}

const MoteHealth* HealthTable::find(const std::string& mote_id) const {
  const auto it = rows_.find(mote_id);
  return it == rows_.end() ? nullptr : &it->second;
}

std::string_view to_string(DownloadPhase phase) {
  switch (phase) {
    case DownloadPhase::bulk: return "bulk";
    case DownloadPhase::send_and_wait: return "send_and_wait";
    case DownloadPhase::done: return "done";
    case DownloadPhase::aborted: return "aborted";
  }
  return "?";
}

DownloadSession::DownloadSession(std::string mote_id, std::uint64_t since_seq, std::optional<std::uint64_t> high_seq)
    : mote_id_(std::move(mote_id)), since_(since_seq), end_(since_seq) {
  if (high_seq && *high_seq >= since_seq) end_ = *high_seq + 1;
  for (std::uint64_t s = since_; s < end_; ++s) holes_.insert(holes_.end(), s);
  stats_.packets_expected = end_ - since_;
}

bool DownloadSession::accept(const SampleRecord& record) {
  if (record.seq < since_ || record.seq >= end_) return false;
  if (!received_.emplace(record.seq, record).second) {
    ++stats_.duplicates_discarded;
    return false;
  }
  holes_.erase(record.seq);
  if (phase_ == DownloadPhase::bulk) ++stats_.packets_received_bulk;
  return true;
}

void DownloadSession::transition(DownloadPhase to) {
  const bool ok = (phase_ == DownloadPhase::bulk && to == DownloadPhase::send_and_wait) ||
                  (phase_ == DownloadPhase::send_and_wait && to == DownloadPhase::done) ||
                  ((phase_ == DownloadPhase::bulk || phase_ == DownloadPhase::send_and_wait) &&
                   to == DownloadPhase::aborted);
  if (!ok) {
    throw std::logic_error("illegal download phase transition " + std::string(to_string(phase_)) + " -> " +
                           std::string(to_string(to)));
  }
  phase_ = to;
}

void DownloadSession::end_bulk() {
  transition(DownloadPhase::send_and_wait);
  stats_.bulk_losses = stats_.packets_expected - stats_.packets_received_bulk;
}

void DownloadSession::finish() {
  if (!holes_.empty()) throw std::logic_error("cannot finish a download with outstanding holes");
  transition(DownloadPhase::done);
}

void DownloadSession::abort() { transition(DownloadPhase::aborted); }

EvictedError::EvictedError(std::uint64_t since_seq, std::uint64_t tail_seq)
    : std::runtime_error("records " + std::to_string(since_seq) + ".." + std::to_string(tail_seq - 1) +
                         " were overwritten before download (" + std::to_string(tail_seq - since_seq) +
                         " records permanently lost)"),
      lost_(tail_seq - since_seq) {}

namespace {

bool arrived(const Delivery& d) { return d.outcome == Outcome::delivered; }

// Pushes one flash record through the link as its 16-byte wire frame.
void send_record(const MoteSim& mote, std::uint64_t seq, const LinkModel& link, LinkState& state, Rng& rng,
                 DownloadSession& session, std::vector<double>* lqi_log) {
  const Delivery d = transmit(link, state, rng);
  if (lqi_log && d.lqi) lqi_log->push_back(*d.lqi);
  if (!arrived(d)) return;
  const SampleRecord r = deserialize(mote.flash().raw(seq), session.since_seq());
  session.accept(r);
  if (d.duplicated) session.accept(r);
}

}  // namespace

DownloadResult run_download(MoteSim& mote, std::uint64_t since_seq, const LinkModel& link, Rng& rng,
                            const DownloadPolicy& policy) {
  link.validate();
  LinkState state;

  // Listen for a status beacon; windows recur every status period.
  const RadioSchedule& radio = mote.config().radio;
  bool heard = false;
  StatusMessage status;
  for (double waited = 0; waited <= policy.status_timeout_s && !heard; waited += radio.status_period_s) {
    if (!mote.can_transmit()) break;
    for (std::uint32_t k = 0; k < radio.beacons_per_window && !heard; ++k) {
      if (arrived(transmit(link, state, rng))) {
        heard = true;
        status = mote.make_status();
      }
    }
  }
  if (!heard) throw UnreachableError("no status beacon from mote " + mote.mote_id() + " within timeout");

  const std::uint64_t tail = mote.flash().tail_seq();
  if (since_seq < tail) throw EvictedError(since_seq, tail);

  DownloadSession session(mote.mote_id(), since_seq, status.highest_seq);
  DownloadStats& stats = session.stats();
  double elapsed = 0;

  // Bulk request: resent until acknowledged by the start of the stream.
  std::uint32_t request_attempts = 0;
  while (true) {
    ++request_attempts;
    if (arrived(transmit(link, state, rng))) break;
    elapsed += policy.reply_timeout_s;
    if (request_attempts >= policy.max_retries_per_packet) {
      mote.charge_download(elapsed);
      throw UnreachableError("bulk request to mote " + mote.mote_id() + " never acknowledged");
    }
  }

  DownloadResult result;
  for (std::uint64_t seq = since_seq; seq < session.end_seq(); ++seq) {
    send_record(mote, seq, link, state, rng, session, &result.bulk_lqi);
    elapsed += policy.packet_interval_s;
  }
  // The mote closes the bulk phase with a status message.
  if (!arrived(transmit(link, state, rng))) elapsed += policy.reply_timeout_s;
  session.end_bulk();

  const std::vector<std::uint64_t> holes(session.holes().begin(), session.holes().end());
  bool aborted = false;
  for (std::uint64_t seq : holes) {
    std::uint32_t attempts = 0;
    while (session.holes().contains(seq)) {
      if (attempts >= policy.max_retries_per_packet) {
        aborted = true;
        break;
      }
      ++attempts;
      ++stats.retransmission_requests;
      if (!arrived(transmit(link, state, rng))) {  // NACK lost
        elapsed += policy.reply_timeout_s;
        continue;
      }
      const std::size_t before = session.received().size();
      send_record(mote, seq, link, state, rng, session, nullptr);
      elapsed += session.received().size() > before ? policy.round_trip_s : policy.reply_timeout_s;
    }
    stats.max_retries_for_one_packet = std::max(stats.max_retries_for_one_packet, attempts);
    if (aborted) break;
  }

  if (aborted) {
    session.abort();
  } else {
    session.finish();
  }
  stats.duration_s = elapsed;
  mote.charge_download(elapsed);

  const SimTime completed = mote.now() + std::chrono::milliseconds{static_cast<std::int64_t>(std::llround(elapsed * 1000.0))};
  result.anchor.utc = floor_seconds(completed);
  result.anchor.mote_time_s =
      static_cast<std::uint32_t>(std::chrono::floor<std::chrono::seconds>(completed - mote.boot_time()).count());
  result.epoch = mote.epoch();
  result.phase = session.phase();
  result.stats = stats;
  result.unrecovered = session.holes();
  result.records.reserve(session.received().size());
  for (const auto& [seq, rec] : session.received()) result.records.push_back(rec);
  if (result.phase == DownloadPhase::done && session.end_seq() > since_seq) {
    mote.acknowledge_download(session.end_seq() - 1);
  }
  return result;
}

}  // namespace soilnet
