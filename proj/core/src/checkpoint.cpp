#include "tlswim/checkpoint.hpp"

#include "tlswim/error.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace tlswim {
namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mlp_to_json(const nn::Mlp& net, const Eigen::VectorXd& params) {
  return {{"widths", net.widths()},
          {"activation", nn::to_string(net.activation())},
          {"params", vector_to_json(params)}};
}

std::pair<nn::Mlp, Eigen::VectorXd> mlp_from_json(const json& j, std::size_t extra) {
  nn::Mlp net(j.at("widths").get<std::vector<int>>(),
              nn::activation_from_string(j.at("activation").get<std::string>()));
  Eigen::VectorXd params = vector_from_json(j.at("params"));
  if (static_cast<std::size_t>(params.size()) != net.parameter_count() + extra)
    throw CheckpointError("checkpoint parameter count does not match the stored architecture");
  return {std::move(net), std::move(params)};
}

json adam_to_json(const nn::Adam& a) {
  return {{"learning_rate", a.learning_rate}, {"beta1", a.beta1},       {"beta2", a.beta2},
          {"epsilon", a.epsilon},             {"steps", a.steps},       {"m", vector_to_json(a.m)},
          {"v", vector_to_json(a.v)}};
}

nn::Adam adam_from_json(const json& j, std::size_t size) {
  nn::Adam a;
  a.learning_rate = j.at("learning_rate").get<double>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.epsilon = j.at("epsilon").get<double>();
  a.steps = j.at("steps").get<long long>();
  a.m = vector_from_json(j.at("m"));
  a.v = vector_from_json(j.at("v"));
  if (static_cast<std::size_t>(a.m.size()) != size || static_cast<std::size_t>(a.v.size()) != size)
    throw CheckpointError("optimizer state size does not match parameters");
  return a;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json j;
  j["format"] = "tlswim-checkpoint";
  j["version"] = kCheckpointVersion;
  j["actor"] = mlp_to_json(ckpt.policy.net, ckpt.policy.params);
  j["actor"]["log_std"] = vector_to_json(ckpt.policy.log_std());
  j["critic"] = mlp_to_json(ckpt.critic.net, ckpt.critic.params);
  j["optimizer"] = {{"actor", adam_to_json(ckpt.actor_optimizer)},
                    {"critic", adam_to_json(ckpt.critic_optimizer)}};
  j["seed_lineage"] = {{"master_seed", ckpt.seed},
                       {"episodes", ckpt.episodes},
                       {"updates", ckpt.updates}};
  j["scalars"] = ckpt.scalars;
  j["strings"] = ckpt.strings;
  return j.dump(1);
}

Checkpoint checkpoint_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "tlswim-checkpoint")
      throw CheckpointError("not a tlswim checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    Checkpoint c;
    auto [actor_net, actor_params] = mlp_from_json(j.at("actor"), nn::kActionWidth);
    if (actor_net.input_width() != nn::kObservationWidth || actor_net.output_width() != nn::kActionWidth)
      throw CheckpointError("actor network has the wrong input/output width");
    c.policy = {std::move(actor_net), std::move(actor_params)};
    auto [critic_net, critic_params] = mlp_from_json(j.at("critic"), 0);
    if (critic_net.input_width() != nn::kObservationWidth || critic_net.output_width() != 1)
      throw CheckpointError("critic network has the wrong input/output width");
    c.critic = {std::move(critic_net), std::move(critic_params)};
    c.actor_optimizer =
        adam_from_json(j.at("optimizer").at("actor"), static_cast<std::size_t>(c.policy.params.size()));
    c.critic_optimizer =
        adam_from_json(j.at("optimizer").at("critic"), static_cast<std::size_t>(c.critic.params.size()));
    const auto& lineage = j.at("seed_lineage");
    c.seed = lineage.at("master_seed").get<std::uint64_t>();
    c.episodes = lineage.at("episodes").get<long long>();
    c.updates = lineage.at("updates").get<long long>();
    c.scalars = j.value("scalars", std::map<std::string, double>{});
    c.strings = j.value("strings", std::map<std::string, std::string>{});
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgumentError& e) {
    throw CheckpointError(std::string("incompatible checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out << checkpoint_to_string(ckpt) << '\n';
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace tlswim
