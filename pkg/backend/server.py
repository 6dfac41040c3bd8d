"""
Servidor FastAPI - API REST do Simulador Incorporado
Integra planejamento, execução de episódios, avaliação, cenários e MQTT.
"""

import logging
import os
from typing import List, Optional

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from backend.agent.config import AgentConfig
from backend.agent.episode import run_episode
from backend.agent.trace import EpisodeTrace, replay_trace
from backend.cap.planner import planner_for
from backend.errors import EmbodiedError
from backend.harness.metrics import MetricsTable, evaluate_episodes, reason_counts
from backend.harness.scenarios import SCENARIO_ALIASES, SCENARIOS, UnknownScenarioError, run_scenario
from backend.harness.suite import Suite, SuiteSpec, generate_suite
from backend.instruction.lexicon import Lexicon
from backend.instruction.templates import Instruction
from backend.mqtt.client_mqtt import MQTTClient
from backend.world.grid_world import GridWorld, WorldRecord
from backend.world.tasks import TaskSpec

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Simulador de Planejamento Incorporado",
    description="API REST para planejamento com contexto e memória do ambiente em mundo em grade",
    version="1.0.0"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Instâncias globais
lexicon = Lexicon.default()
mqtt_client = MQTTClient(
    broker_host=os.getenv('MQTT_HOST', 'localhost'),
    broker_port=int(os.getenv('MQTT_PORT', '1883')),
    broker_path=os.getenv('MQTT_PATH', '/mqtt'),
    use_websockets=os.getenv('MQTT_WEBSOCKETS', '0') == '1',
)


# Modelos Pydantic para validação
class PlanRequest(BaseModel):
    """Instrução a planejar."""
    instruction: str
    cap_enabled: bool = True


class EpisodeRequest(BaseModel):
    """Episódio avulso: mundo inicial, instrução e configuração."""
    world: WorldRecord
    instruction: str
    task: Optional[TaskSpec] = None
    config: AgentConfig = Field(default_factory=AgentConfig)
    episode_id: str = 'api'
    include_events: bool = False


class EvaluateRequest(BaseModel):
    """Avaliação em lote: suíte pronta ou parâmetros para gerá-la."""
    suite: Optional[Suite] = None
    spec: Optional[SuiteSpec] = None
    configs: List[AgentConfig] = Field(default_factory=lambda: [AgentConfig()])
    jobs: int = Field(default=1, ge=1)


def _domain_error(context: str, e: Exception) -> HTTPException:
    logger.error(f"Erro {context}: {e}")
    return HTTPException(status_code=400, detail=str(e))


def _internal_error(context: str, e: Exception) -> HTTPException:
    logger.error(f"Erro {context}: {e}", exc_info=True)
    return HTTPException(status_code=500, detail=str(e))


@app.on_event("startup")
async def startup_event():
    """Inicializa componentes na startup."""
    logger.info("Iniciando servidor...")
    try:
        connected = mqtt_client.connect(timeout=5)
        if connected:
            logger.info("✅ Conectado ao broker MQTT com sucesso")
        elif mqtt_client.simulation_mode:
            logger.info("ℹ️ Modo simulação MQTT ativado - telemetria salva apenas localmente")
        else:
            logger.warning("⚠️ Não foi possível conectar ao MQTT na primeira tentativa")
    except Exception as e:
        logger.warning(f"⚠️ Erro ao tentar conectar ao MQTT: {e}")
        mqtt_client.simulation_mode = True
        logger.info("ℹ️ Modo simulação MQTT ativado")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("Encerrando servidor...")
    mqtt_client.disconnect()


@app.get("/")
async def root():
    """Rota raiz."""
    return {
        "message": "Simulador de Planejamento Incorporado",
        "version": "1.0.0",
        "endpoints": {
            "plan": "/api/plan",
            "episode": "/api/episode",
            "evaluate": "/api/evaluate",
            "scenarios": "/api/scenarios",
            "replay": "/api/replay",
            "health": "/api/health"
        }
    }


@app.get("/api/health")
async def health_check():
    """Verifica saúde do sistema."""
    return {
        "status": "healthy",
        "mqtt_connected": mqtt_client.is_connected(),
        "mqtt_status": mqtt_client.get_status()
    }


@app.get("/api/mqtt/status")
async def get_mqtt_status():
    return mqtt_client.get_status()


@app.get("/api/mqtt/alerts")
async def get_mqtt_alerts(limit: Optional[int] = 50):
    """Retorna histórico de alertas MQTT."""
    return {
        "alerts": mqtt_client.get_alert_history(limit=limit),
        "total": len(mqtt_client.get_alert_history(limit=0))
    }


@app.post("/api/plan")
async def make_plan(request: PlanRequest):
    """
    Planeja os sub-objetivos de uma instrução.

    Args:
        request: Instrução e flag de contexto

    Returns:
        Registro do plano (contexto, família, sub-objetivos)
    """
    try:
        result = planner_for(request.cap_enabled)(Instruction.from_text(request.instruction),
                                                  lexicon)
        return JSONResponse(content=result.to_record())
    except EmbodiedError as e:
        raise _domain_error("no planejamento", e)
    except Exception as e:
        raise _internal_error("no planejamento", e)


@app.post("/api/episode")
async def execute_episode(request: EpisodeRequest):
    """
    Executa um episódio e devolve o terminal do trace.

    Returns:
        Terminal (sucesso, passos, motivo, objetivo, plano) e, opcionalmente, os eventos
    """
    try:
        world = GridWorld.from_record(request.world)
        trace = run_episode(world, Instruction.from_text(request.instruction), lexicon,
                            request.config, request.task, request.episode_id)
    except EmbodiedError as e:
        raise _domain_error("no episódio", e)
    except Exception as e:
        raise _internal_error("no episódio", e)

    summary = {'episode_id': trace.episode_id, 'config': request.config.label(),
               'success': trace.success, 'steps': trace.steps, 'reason': trace.reason}
    mqtt_client.publish_episode(summary)
    mqtt_client.check_episode_alerts(summary)

    response = {'terminal': trace.terminal}
    if request.include_events:
        response['events'] = [event.to_dict() for event in trace.events]
    return JSONResponse(content=response)


@app.post("/api/evaluate")
async def evaluate_suite(request: EvaluateRequest):
    """
    Avalia a suíte sob cada configuração.

    Returns:
        Linhas da MetricsTable, contagem de motivos e violações
    """
    try:
        suite = request.suite or generate_suite(request.spec or SuiteSpec(per_family=1),
                                                lexicon)
        outputs = evaluate_episodes(suite, request.configs, request.jobs, lexicon)
    except EmbodiedError as e:
        raise _domain_error("na avaliação", e)
    except Exception as e:
        raise _internal_error("na avaliação", e)

    results = [result for result, _ in outputs]
    table = MetricsTable.from_results(results, [c.label() for c in request.configs])
    violations = table.violations()
    mqtt_client.publish_metrics(table.to_dict()['rows'])
    mqtt_client.check_invariant_alerts(violations, source='api/evaluate')
    return JSONResponse(content={
        'rows': table.to_dict()['rows'],
        'reasons': {config: dict(counts) for config, counts in reason_counts(results).items()},
        'violations': violations,
        'episodes': len(suite),
    })


@app.get("/api/scenarios")
async def list_scenarios():
    return {
        'scenarios': [
            {'name': s.name, 'description': s.description, 'instruction': s.instruction,
             'ablation': s.ablated_config().label(), 'expect': s.expect,
             'aliases': sorted(a for a, target in SCENARIO_ALIASES.items() if target == s.name)}
            for s in SCENARIOS.values()
        ]
    }


@app.post("/api/scenarios/{name}")
async def execute_scenario(name: str):
    """Executa o cenário com a configuração completa e com a ablação."""
    try:
        result = run_scenario(name, lexicon)
    except UnknownScenarioError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except EmbodiedError as e:
        raise _domain_error("no cenário", e)
    except Exception as e:
        raise _internal_error("no cenário", e)
    return JSONResponse(content=result.summary())


@app.post("/api/replay")
async def replay(file: UploadFile = File(...)):
    """
    Reexecuta um trace JSONL enviado e confere os status registrados.

    Returns:
        ReplayReport serializado
    """
    try:
        text = (await file.read()).decode('utf-8')
        report = replay_trace(EpisodeTrace.from_jsonl(text))
    except EmbodiedError as e:
        raise _domain_error("no replay", e)
    except Exception as e:
        raise _internal_error("no replay", e)
    if not report.ok:
        mqtt_client.check_invariant_alerts(report.mismatches, source=f'replay {report.episode_id}')
    return JSONResponse(content=report.to_dict())


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
