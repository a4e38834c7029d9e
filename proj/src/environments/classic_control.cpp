#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pbvf/environments.hpp"

namespace pbvf {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double x, double m, double M) {
  const double diff = M - m;
  while (x > M) x = x - diff;
  while (x < m) x = x + diff;
  return x;
}

double bound(double x, double m, double M) { return std::min(std::max(x, m), M); }

}  // namespace

Vector Env::reset() {
  reset_state(rng_);
  elapsed_ = 0;
  done_ = false;
  return observation();
}

StepResult Env::step(const Vector& action) {
  if (done_) throw ProtocolError(std::string(name()) + ": step() called on a finished episode; call reset()");
  StepResult result = advance(action);
  ++elapsed_;
  if (!result.terminated && elapsed_ >= max_episode_steps_) result.truncated = true;
  done_ = result.done();
  return result;
}

int Env::discrete_index(const Vector& action, int n) const {
  if (action.size() != 1) {
    throw InputError(std::string(name()) + ": discrete action must be a single index, got " +
                     std::to_string(action.size()) + " values");
  }
  const double a = action[0];
  if (a != std::floor(a) || a < 0 || a >= n) {
    throw InputError(std::string(name()) + ": action " + std::to_string(a) + " outside {0.." +
                     std::to_string(n - 1) + "}");
  }
  return static_cast<int>(a);
}

StepResult LqrEnv::advance(const Vector& action) {
  if (action.size() != 1) throw InputError("lqr: action must have exactly one component");
  const double a = action[0];
  const double reward = -state_ * state_ - a * a;
  state_ = std::clamp(state_ + a, -kStateBound, kStateBound);
  return {observation(), reward, false, false};
}

const double CartPoleEnv::kThetaThreshold = 12 * 2 * kPi / 360;

Vector CartPoleEnv::observation_low() const { return -observation_high(); }

Vector CartPoleEnv::observation_high() const {
  const double inf = std::numeric_limits<double>::infinity();
  return Vector{{kXThreshold * 2, inf, kThetaThreshold * 2, inf}};
}

void CartPoleEnv::reset_state(SeededRng& rng) {
  for (int i = 0; i < 4; ++i) state_[i] = rng.uniform(-0.05, 0.05);
}

StepResult CartPoleEnv::advance(const Vector& action) {
  const int a = discrete_index(action, 2);
  double x = state_[0];
  double x_dot = state_[1];
  double theta = state_[2];
  double theta_dot = state_[3];
  const double force = a == 1 ? kForceMag : -kForceMag;
  const double costheta = std::cos(theta);
  const double sintheta = std::sin(theta);
  // Operation order mirrors the reference implementation.
  const double temp = (force + kPoleMassLength * (theta_dot * theta_dot) * sintheta) / kTotalMass;
  const double thetaacc = (kGravity * sintheta - costheta * temp) /
                          (kHalfLength * (4.0 / 3.0 - kMassPole * (costheta * costheta) / kTotalMass));
  const double xacc = temp - kPoleMassLength * thetaacc * costheta / kTotalMass;
  x = x + kTau * x_dot;
  x_dot = x_dot + kTau * xacc;
  theta = theta + kTau * theta_dot;
  theta_dot = theta_dot + kTau * thetaacc;
  state_ = Vector{{x, x_dot, theta, theta_dot}};
  const bool terminated =
      x < -kXThreshold || x > kXThreshold || theta < -kThetaThreshold || theta > kThetaThreshold;
  return {state_, 1.0, terminated, false};
}

void MountainCarContinuousEnv::reset_state(SeededRng& rng) {
  position_ = rng.uniform(-0.6, -0.4);
  velocity_ = 0.0;
  float32_state_ = false;
}

namespace {

double f32(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace

// Mirrors the reference's numpy promotion: the action arrives as float32, and
// once the state is float32 every update is rounded to float32 with Python
// constants cast down first.
StepResult MountainCarContinuousEnv::advance(const Vector& action) {
  if (action.size() != 1) throw InputError("mountaincar-cont: action must have exactly one component");
  const bool low = float32_state_;
  auto add = [low](double a, double b) { return low ? f32(a + f32(b)) : a + b; };
  const double a32 = f32(action[0]);
  double position = position_;
  double velocity = velocity_;
  const double three_position = low ? f32(3.0 * position) : 3.0 * position;
  const double drag = 0.0025 * std::cos(three_position);
  double dv;
  if (a32 > 1.0 || a32 < -1.0) {
    dv = (a32 > 1.0 ? 1.0 : -1.0) * kPower - drag;
  } else {
    dv = f32(f32(a32 * f32(kPower)) - f32(drag));
  }
  velocity = add(velocity, dv);
  if (velocity > kMaxSpeed) velocity = kMaxSpeed;
  if (velocity < -kMaxSpeed) velocity = -kMaxSpeed;
  position = add(position, velocity);
  if (position > kMaxPosition) position = kMaxPosition;
  if (position < kMinPosition) position = kMinPosition;
  if (position == kMinPosition && velocity < 0) velocity = 0;
  const double goal = low ? f32(kGoalPosition) : kGoalPosition;
  const bool terminated = position >= goal && velocity >= kGoalVelocity;
  double reward = 0.0;
  if (terminated) reward = 100.0;
  reward -= std::pow(a32, 2) * 0.1;
  position_ = f32(position);
  velocity_ = f32(velocity);
  float32_state_ = true;
  return {observation(), reward, terminated, false};
}

const double AcrobotEnv::kMaxVel1 = 4 * kPi;
const double AcrobotEnv::kMaxVel2 = 9 * kPi;

Vector AcrobotEnv::observation_low() const { return -observation_high(); }

Vector AcrobotEnv::observation_high() const { return Vector{{1.0, 1.0, 1.0, 1.0, kMaxVel1, kMaxVel2}}; }

Vector AcrobotEnv::observation() const {
  return Vector{{std::cos(state_[0]), std::sin(state_[0]), std::cos(state_[1]), std::sin(state_[1]), state_[2],
                 state_[3]}};
}

void AcrobotEnv::reset_state(SeededRng& rng) {
  // The reference draws the initial state in float32.
  for (int i = 0; i < 4; ++i) state_[i] = static_cast<double>(static_cast<float>(rng.uniform(-0.1, 0.1)));
}

namespace {

using Acrobot5 = Eigen::Matrix<double, 5, 1>;

Acrobot5 acrobot_dsdt(const Acrobot5& s_augmented) {
  constexpr double m1 = AcrobotEnv::kLinkMass1;
  constexpr double m2 = AcrobotEnv::kLinkMass2;
  constexpr double l1 = AcrobotEnv::kLinkLength1;
  constexpr double lc1 = AcrobotEnv::kLinkComPos1;
  constexpr double lc2 = AcrobotEnv::kLinkComPos2;
  constexpr double I1 = AcrobotEnv::kLinkMoi;
  constexpr double I2 = AcrobotEnv::kLinkMoi;
  constexpr double g = 9.8;
  const double a = s_augmented[4];
  const double theta1 = s_augmented[0];
  const double theta2 = s_augmented[1];
  const double dtheta1 = s_augmented[2];
  const double dtheta2 = s_augmented[3];
  const double d1 = m1 * (lc1 * lc1) + m2 * ((l1 * l1) + (lc2 * lc2) + 2 * l1 * lc2 * std::cos(theta2)) + I1 + I2;
  const double d2 = m2 * ((lc2 * lc2) + l1 * lc2 * std::cos(theta2)) + I2;
  const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * (dtheta2 * dtheta2) * std::sin(theta2) -
                      2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2) + phi2;
  const double ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * (dtheta1 * dtheta1) * std::sin(theta2) - phi2) /
                          (m2 * (lc2 * lc2) + I2 - (d2 * d2) / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  Acrobot5 out;
  out << dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0;
  return out;
}

}  // namespace

StepResult AcrobotEnv::advance(const Vector& action) {
  static constexpr double kTorques[3] = {-1.0, 0.0, 1.0};
  const int a = discrete_index(action, 3);
  Acrobot5 y0;
  y0 << state_[0], state_[1], state_[2], state_[3], kTorques[a];
  const double dt = kDt;
  const double dt2 = dt / 2.0;
  const Acrobot5 k1 = acrobot_dsdt(y0);
  const Acrobot5 k2 = acrobot_dsdt(y0 + dt2 * k1);
  const Acrobot5 k3 = acrobot_dsdt(y0 + dt2 * k2);
  const Acrobot5 k4 = acrobot_dsdt(y0 + dt * k3);
  const Acrobot5 y1 = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  state_[0] = wrap(y1[0], -kPi, kPi);
  state_[1] = wrap(y1[1], -kPi, kPi);
  state_[2] = bound(y1[2], -kMaxVel1, kMaxVel1);
  state_[3] = bound(y1[3], -kMaxVel2, kMaxVel2);
  const bool terminated = -std::cos(state_[0]) - std::cos(state_[1] + state_[0]) > 1.0;
  return {observation(), terminated ? 0.0 : -1.0, terminated, false};
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names = {"lqr", "cartpole", "mountaincar-cont", "acrobot", "chain2"};
  return names;
}

std::unique_ptr<Env> make_env(std::string_view name, std::uint64_t seed) {
  if (name == "lqr") return std::make_unique<LqrEnv>(seed);
  if (name == "cartpole") return std::make_unique<CartPoleEnv>(seed);
  if (name == "mountaincar-cont") return std::make_unique<MountainCarContinuousEnv>(seed);
  if (name == "acrobot") return std::make_unique<AcrobotEnv>(seed);
  if (name == "chain2") return std::make_unique<FiniteMdpEnv>(make_chain2(), seed);
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

}  // namespace pbvf
