"""
Episodios em malha fechada e coleta de demonstracoes

replan -> intencao -> politica -> passo, com intervencao em colisao,
transicoes entre plantas e reancoragem da odometria.
"""

import math
import time
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.config import CameraConfig, SimConfig, config
from ..core.errors import EmptyDataset, NoFeasibleControl, NoPath, Unreachable
from ..core.log import get_logger
from ..decision.data import DemoDataset, DemoRecord
from ..decision.net import DecisionNet, NetState, forward
from ..decision.tensor import no_grad
from ..intention.dlm import DLM
from ..intention.lpe import render_lpe
from ..intention.plan import IntentionScheduler, build_route_intentions
from ..mapsys.types import EdgeKind, ExitNode, MapBundle, Point, Pose2D, distance
from ..planner.grid import GridPath, inflation_cells
from ..planner.route import HorizonPolicy, RoutePlan, Transition, replan
from .agents import AdversaryAgent
from .camera import EgoObservation, render_observation
from .expert import ExpertConfig, pursuit_command, remaining_length, scripted_expert
from .fixtures import resolve_map
from .odometry import OdometryDelta, integrate_odometry, odometry_read, position_error, re_anchor
from .scenario import Scenario
from .trajlog import AnchorRecord, TickRow, TrajectoryLog
from .world import Event, EventKind, RobotState, World, step_world, wrap_angle

logger = get_logger(__name__)

HISTORY_POINTS = 200
INTERVENTION_ADVANCE_M = 0.3

Recorder = Callable[[int, Optional[EgoObservation], DLM, tuple[float, float]], None]


class PolicyContext(BaseModel):
    """Tudo que uma politica pode consultar em um tick"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    world: World
    robot: RobotState
    estimate: Pose2D
    observation: Optional[EgoObservation] = None
    intention: DLM
    path: Optional[GridPath] = None
    history: list[Point] = []
    tick: int = 0


class Policy(Protocol):
    """Controlador em malha fechada: (v, theta) normalizados"""
    name: str

    def reset(self) -> None: ...

    def act(self, ctx: PolicyContext) -> tuple[float, float]: ...


def policy_mode(intention: DLM) -> DLM:
    """Stop nao chega a rede: o episodio termina pela tolerancia do objetivo"""
    return DLM.GO_FORWARD if intention == DLM.STOP else intention


class ExpertPolicy:
    """Especialista com acesso ao mundo verdadeiro"""

    needs_observation = False

    def __init__(self, cfg: Optional[ExpertConfig] = None, name: str = "expert"):
        self.cfg = cfg or ExpertConfig()
        self.name = name

    def reset(self) -> None:
        pass

    def act(self, ctx: PolicyContext) -> tuple[float, float]:
        if ctx.path is None:
            return 0.0, 0.0
        return scripted_expert(ctx.world, ctx.path, ctx.robot, self.cfg)


class PathTrackerPolicy:
    """Perseguicao pura sobre o caminho planejado, sem percepcao"""

    needs_observation = False

    def __init__(self, lookahead_m: float = 0.8, rotate_deg: float = 60.0,
                 slow_radius_m: float = 1.0, name: str = "path_tracker"):
        self.lookahead_m = lookahead_m
        self.rotate_deg = rotate_deg
        self.slow_radius_m = slow_radius_m
        self.name = name

    def reset(self) -> None:
        pass

    def act(self, ctx: PolicyContext) -> tuple[float, float]:
        if ctx.path is None:
            return 0.0, 0.0
        points = np.asarray(ctx.path.polyline, dtype=np.float64).reshape(-1, 2)
        sim = ctx.world.sim
        return pursuit_command(ctx.estimate, points, self.lookahead_m, self.rotate_deg, sim.v_max,
                               sim.theta_max, remaining_length(points, ctx.estimate.xy),
                               self.slow_radius_m)


class NetPolicy:
    """Rede treinada (DECISION ou baseline) com estado carregado entre ticks"""

    needs_observation = True

    def __init__(self, net: DecisionNet, name: Optional[str] = None,
                 lpe_window_m: Optional[float] = None):
        self.net = net
        self.name = name or net.kind
        self.lpe_window_m = lpe_window_m
        self.state: Optional[NetState] = None
        self.forward_calls = 0

    @property
    def input_side(self) -> int:
        return self.net.spec.input_side

    def reset(self) -> None:
        self.state = None
        self.forward_calls = 0

    def _lpe(self, ctx: PolicyContext) -> Optional[np.ndarray]:
        if self.net.kind != "lpe_net":
            return None
        future: list[Point] = []
        if ctx.path is not None and ctx.path.cells:
            points = np.asarray(ctx.path.polyline, dtype=np.float64)
            d = np.hypot(points[:, 0] - ctx.estimate.x, points[:, 1] - ctx.estimate.y)
            future = [tuple(p) for p in points[int(np.argmin(d)):]]
        image = render_lpe(ctx.world.grid(ctx.estimate.frame), ctx.history, future, ctx.estimate,
                           self.lpe_window_m, self.input_side)
        return image.pixels.transpose(2, 0, 1)

    def act(self, ctx: PolicyContext) -> tuple[float, float]:
        image = ctx.observation.as_input(self.net.spec.in_channels)
        with no_grad():
            control, self.state = forward(self.net, image, ctx.intention, self.state,
                                          lpe=self._lpe(ctx))
        self.forward_calls += 1
        return control


def intervene(world: World, robot: RobotState, path_points: Sequence[Point],
              sim: Optional[SimConfig] = None) -> RobotState:
    """
    Volta ao caminho: ponto livre mais proximo a frente, alinhado ao caminho

    Anda ate o primeiro ponto com folga segura e mais 0.3 m, para nao
    recomecar colado no obstaculo.
    """
    sim = sim or world.sim
    points = np.asarray(path_points, dtype=np.float64).reshape(-1, 2)
    if len(points) == 0:
        return RobotState(pose=robot.pose)
    frame = robot.pose.frame
    clear = world.clearance(frame, points) >= sim.safe_distance
    i0 = int(np.argmin(np.hypot(points[:, 0] - robot.pose.x, points[:, 1] - robot.pose.y)))
    ahead = np.nonzero(clear[i0:])[0]
    if ahead.size:
        i = i0 + int(ahead[0])
    else:
        behind = np.nonzero(clear[:i0])[0]
        i = int(behind[-1]) if behind.size else i0
    travelled = 0.0
    for j in range(i + 1, len(points)):
        travelled += float(np.hypot(*(points[j] - points[j - 1])))
        if travelled > INTERVENTION_ADVANCE_M:
            break
        if clear[j]:
            i = j
    if i + 1 < len(points):
        dx, dy = points[i + 1] - points[i]
    elif i > 0:
        dx, dy = points[i] - points[i - 1]
    else:
        dx, dy = math.cos(robot.pose.heading), math.sin(robot.pose.heading)
    pose = Pose2D(frame=frame, x=float(points[i][0]), y=float(points[i][1]),
                  heading=math.atan2(dy, dx))
    return RobotState(pose=pose)


def _carry(estimate: Pose2D, old: Pose2D, new: Pose2D) -> Pose2D:
    """Move a estimativa junto com a pose verdadeira, preservando o erro"""
    dh = estimate.heading - old.heading
    return Pose2D(
        frame=new.frame,
        x=new.x + (estimate.x - old.x),
        y=new.y + (estimate.y - old.y),
        heading=new.heading if dh == 0.0 else wrap_angle(new.heading + dh),
    )


def _segment_in(route: Optional[RoutePlan], frame: str) -> Optional[GridPath]:
    if route is None:
        return None
    for item in route.grid_segments:
        if item.floorplan_id == frame and item.cells:
            return item
    return None


def _departure(route: Optional[RoutePlan], bundle: MapBundle, frame: str) -> Optional[Transition]:
    """Proxima transicao entre plantas que sai desta planta"""
    if route is None:
        return None
    for item in route.transitions:
        exit = bundle.exits.get(item.from_id)
        if exit is not None and exit.floorplan_id == frame:
            return item if item.kind == EdgeKind.INTER else None
    return None


def _visible_exit(bundle: MapBundle, pose: Pose2D) -> Optional[ExitNode]:
    """Saida mais proxima dentro da margem (reconhecimento de lugar)"""
    best = None
    for exit in bundle.exits_on(pose.frame):
        d = distance(pose.xy, exit.metric_position)
        if d <= exit.margin_m and (best is None or d < best[0]):
            best = (d, exit)
    return None if best is None else best[1]


def _note(log: TrajectoryLog, event: Event) -> None:
    if log.rows:
        log.rows[-1].events.append(str(event))


def run_episode(
    policy: Policy,
    scenario: Scenario,
    seed: int,
    bundle: Optional[MapBundle] = None,
    sim: Optional[SimConfig] = None,
    recorder: Optional[Recorder] = None,
    fail_fast: bool = False,
) -> TrajectoryLog:
    """Episodio deterministico dado (cenario, semente, politica)"""
    sim = sim or config.sim
    bundle = bundle or resolve_map(scenario)
    world = World(bundle, scenario.props, seed=seed, sim=sim)
    if scenario.adversary is not None:
        world.agents.append(AdversaryAgent(scenario.adversary, scenario.start.frame, world.rng))
    odo_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])

    cam: CameraConfig = sim.camera
    side = getattr(policy, "input_side", None)
    if side is not None and side != cam.side:
        cam = cam.model_copy(update={"side": side})
    wants_obs = recorder is not None or getattr(policy, "needs_observation", False)

    log = TrajectoryLog(scenario=scenario.name, policy=policy.name, seed=seed, dt=world.dt)
    policy.reset()
    robot = RobotState(pose=scenario.start)
    estimate = scenario.start
    history: list[Point] = [estimate.xy]

    def anchor(exit: Optional[ExitNode]) -> None:
        nonlocal estimate
        if exit is None or not scenario.anchoring:
            return
        before = position_error(estimate, robot.pose)
        estimate = re_anchor(estimate, exit, detected=True)
        log.anchors.append(AnchorRecord(tick=world.tick, exit_id=exit.id, error_before=before,
                                        error_after=position_error(estimate, robot.pose)))

    anchor(_visible_exit(bundle, robot.pose))

    goal_index = 0
    leg_clean = True
    route: Optional[RoutePlan] = None
    scheduler: Optional[IntentionScheduler] = None
    need_plan = True
    last_plan = 0
    started = time.perf_counter()

    while world.tick < scenario.max_ticks:
        if need_plan or (not scenario.plan_once and world.tick - last_plan >= scenario.replan_every):
            grid = bundle.floorplans[estimate.frame]
            try:
                route = replan(bundle, estimate, scenario.goals[goal_index], HorizonPolicy.FULL,
                               inflation_cells(grid, sim.plan_inflation_m))
            except (NoPath, Unreachable) as e:
                logger.info(f"[{scenario.name}/{seed}] sem caminho: {e}")
                _note(log, Event(kind=EventKind.NO_PATH, detail=str(goal_index)))
                break
            scheduler = IntentionScheduler(build_route_intentions(route), consume_start=True)
            last_plan = world.tick
            need_plan = False

        path = _segment_in(route, robot.pose.frame)
        mode = policy_mode(scheduler.update(estimate))
        obs = render_observation(world, robot, cam) if wants_obs else None
        ctx = PolicyContext(world=world, robot=robot, estimate=estimate, observation=obs,
                            intention=mode, path=path, history=history[-HISTORY_POINTS:],
                            tick=world.tick)
        try:
            control = policy.act(ctx)
        except NoFeasibleControl as e:
            if fail_fast:
                raise
            logger.warning(f"[{scenario.name}/{seed}] tick {world.tick}: {e}")
            _note(log, Event(kind=EventKind.NO_FEASIBLE_CONTROL, detail=str(world.tick)))
            break
        if recorder is not None:
            recorder(world.tick, obs, mode, control)

        world, robot, events = step_world(world, robot, control)
        noisy = odometry_read(scenario.odometry, OdometryDelta(robot.trans, robot.rot), odo_rng)
        estimate = integrate_odometry(estimate, noisy)
        done = False

        if any(e.kind == EventKind.COLLISION for e in events):
            log.interventions += 1
            leg_clean = False
            events.append(Event(kind=EventKind.INTERVENTION, detail=str(log.interventions)))
            if scenario.intervention_rule == "terminate":
                done = True
            else:
                moved = intervene(world, robot, path.polyline if path else [], sim)
                estimate = _carry(estimate, robot.pose, moved.pose)
                robot = moved
                need_plan = not scenario.plan_once

        transition = _departure(route, bundle, robot.pose.frame)
        if not done and transition is not None:
            exit = bundle.exits[transition.from_id]
            if distance(robot.pose.xy, exit.metric_position) <= sim.goal_tolerance:
                arrival = bundle.exits[transition.to_id]
                x, y = arrival.metric_position
                landed = Pose2D(frame=arrival.floorplan_id, x=x, y=y, heading=robot.pose.heading)
                estimate = _carry(estimate, robot.pose, landed)
                robot = RobotState(pose=landed)
                events.append(Event(kind=EventKind.TRANSITION,
                                    detail=f"{transition.from_id}->{transition.to_id}"))
                n_anchors = len(log.anchors)
                seen = distance(landed.xy, arrival.metric_position) <= arrival.margin_m
                anchor(arrival if seen else None)
                if len(log.anchors) > n_anchors:
                    events.append(Event(kind=EventKind.ANCHOR, detail=arrival.id))
                need_plan = not scenario.plan_once

        goal = scenario.goals[goal_index]
        if (not done and robot.pose.frame == goal.frame
                and distance(robot.pose.xy, goal.xy) <= sim.goal_tolerance):
            events.append(Event(kind=EventKind.STEP,
                                detail=f"{goal_index}:{'ok' if leg_clean else 'fail'}"))
            if scenario.adversary is None:
                log.steps.append(leg_clean)
            leg_clean = True
            goal_index += 1
            need_plan = True
            if goal_index == len(scenario.goals):
                log.goal_reached = True
                done = True

        if world.agents and all(agent.done for agent in world.agents):
            done = True

        history.append(estimate.xy)
        log.rows.append(TickRow(
            tick=world.tick, t=world.tick * world.dt,
            frame=robot.pose.frame, x=robot.pose.x, y=robot.pose.y, heading=robot.pose.heading,
            est_frame=estimate.frame, est_x=estimate.x, est_y=estimate.y,
            est_heading=estimate.heading, v=float(control[0]), theta=float(control[1]),
            intention=mode.value, events=[str(e) for e in events],
        ))
        if done:
            break

    if scenario.adversary is not None:
        outcomes = [o for agent in world.agents for o in agent.outcomes]
        log.steps = (outcomes + [False] * scenario.steps)[: scenario.steps]
    else:
        log.steps = log.steps + [False] * (scenario.steps - len(log.steps))
    log.terminal_error = position_error(estimate, robot.pose)
    log.forward_calls = getattr(policy, "forward_calls", 0)
    log.wall_seconds = time.perf_counter() - started
    return log


def collect_demonstrations(
    scenarios: Sequence[Scenario],
    seeds: Sequence[int],
    expert: Optional[Policy] = None,
    intention_map: Callable[[DLM], DLM] = policy_mode,
    sim: Optional[SimConfig] = None,
) -> DemoDataset:
    """Uma sequencia por (cenario, semente): observacao, intencao e controle do especialista"""
    expert = expert or ExpertPolicy()
    sim = sim or config.sim
    sequences: list[list[DemoRecord]] = []
    for scenario in scenarios:
        bundle = resolve_map(scenario)
        for seed in seeds:
            records: list[DemoRecord] = []

            def record(tick, obs, mode, control) -> None:
                records.append(DemoRecord(
                    t=tick * sim.dt, mode=intention_map(mode),
                    v=float(np.clip(control[0], -1.0, 1.0)),
                    theta=float(np.clip(control[1], -1.0, 1.0)),
                    image=obs.pixels,
                ))

            try:
                run_episode(expert, scenario, seed, bundle=bundle, sim=sim, recorder=record,
                            fail_fast=True)
            except NoFeasibleControl as e:
                logger.warning(f"Episodio {scenario.name}/{seed} descartado: {e}")
                continue
            if not records:
                logger.warning(f"Episodio {scenario.name}/{seed} sem registros; ignorado")
                continue
            sequences.append(records)
            logger.debug(f"{scenario.name}/{seed}: {len(records)} registros")
    if not sequences:
        raise EmptyDataset("Nenhum episodio produziu demonstracoes")
    return DemoDataset.from_sequences(sequences)
