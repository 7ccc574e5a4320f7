#pragma once

// Line-delimited JSON protocol that lets an external learner drive a simulation.
// Frame reference: docs/protocol.md.

#include "rmfs/obs_graph.hpp"
#include "rmfs/policies.hpp"
#include "rmfs/simulation.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace rmfs {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

/// Observation payload of a pending decision: event, pruned graph, value features, and mask /
/// bias aligned with graph.targets.
nlohmann::json decision_payload(const Simulation& sim, int k1, int k2);

/// Per-target bias and legal-mask vectors aligned with `targets`.
std::vector<double> target_bias(const Simulation& sim, const std::vector<int>& targets);
std::vector<int> target_mask(const Simulation& sim, const std::vector<int>& targets);

nlohmann::json metrics_json(const EpisodeMetrics& m);

/// Reference external policy: argmax bias over the useful targets of a state frame (all legal
/// targets when none is useful), lowest action id on ties. Returns the global action id, or
/// -1 if the frame has no legal target.
int bias_policy_action(const nlohmann::json& state);

/// One protocol session: hello -> reset -> state/action ... -> result.
///
/// handle() never throws and returns exactly one reply frame (without the trailing newline)
/// for every request line. Reply sequence numbers start at 0 and increase by one per reply.
class Session {
 public:
  explicit Session(std::string id);

  std::string handle(std::string_view line);
  bool closed() const { return closed_; }
  const std::string& id() const { return id_; }
  /// The active simulation, if an episode was reset.
  const Simulation* simulation() const { return sim_.get(); }

 private:
  nlohmann::json on_hello(const nlohmann::json& req);
  nlohmann::json on_reset(const nlohmann::json& req);
  nlohmann::json on_action(const nlohmann::json& req);
  nlohmann::json on_result(const nlohmann::json& req);
  nlohmann::json state_frame();
  nlohmann::json error_frame(const std::string& code, const std::string& message, bool with_state);
  std::string reply(nlohmann::json frame);

  std::string id_;
  long seq_ = 0;
  bool greeted_ = false;
  bool closed_ = false;
  std::unique_ptr<Simulation> sim_;
  int k1_ = 50;
  int k2_ = 50;
  StepResult last_;
};

/// Scheduler that forwards every decision to an external policy endpoint ("host:port") as a
/// state frame and reads back an action frame {"type":"action","action":a}.
class RemoteScheduler : public Scheduler {
 public:
  RemoteScheduler(const std::string& endpoint, int k1 = 50, int k2 = 50);
  ~RemoteScheduler() override;
  RemoteScheduler(const RemoteScheduler&) = delete;
  RemoteScheduler& operator=(const RemoteScheduler&) = delete;

  std::string name() const override { return "remote"; }
  int choose(const Simulation& sim) override;

 private:
  int fd_ = -1;
  int k1_;
  int k2_;
  long seq_ = 0;
  std::string buffer_;
};

}  // namespace rmfs
