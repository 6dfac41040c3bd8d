"""
Módulo Cliente MQTT
Implementa a telemetria do harness: resumos de episódio, linhas de métricas
e alertas (violação de invariante, orçamento esgotado, comunicação).
"""

import json
import logging
import socket
import time
from datetime import datetime
from typing import Iterable, List, Optional

import paho.mqtt.client as mqtt

logger = logging.getLogger(__name__)

TOPIC_EPISODE = 'embodied/harness/episode'
TOPIC_METRICS = 'embodied/harness/metrics'
TOPIC_ALERT = 'embodied/harness/alert'

# Motivos de término que indicam orçamento esgotado
BUDGET_REASONS = ('max_steps', 'max_interaction_failures')


class MQTTClient:
    """
    Cliente MQTT para a telemetria do harness.

    Tópicos:
    - embodied/harness/episode: Resumo de cada episódio avaliado
    - embodied/harness/metrics: Linhas da tabela de métricas
    - embodied/harness/alert: Alertas

    Estrutura de Mensagens de Alerta:
    - timestamp: Marca temporal da ocorrência (ISO format)
    - tipo: Categoria do alerta ('invariante', 'orçamento', 'comunicação')
    - mensagem: Descrição human-readable
    - severidade: Nível de importância ('baixa', 'média', 'alta', 'crítica')
    - dados: Valores relevantes (dicionário)
    """

    def __init__(self, broker_host='localhost', broker_port=1883, broker_path='/mqtt',
                 use_websockets=False):
        """
        Inicializa o cliente MQTT.

        Args:
            broker_host: Endereço do broker MQTT (padrão: localhost)
            broker_port: Porta do broker MQTT (padrão: 1883)
            broker_path: Path do broker para WebSockets (padrão: /mqtt)
            use_websockets: Se True, usa WebSockets em vez de TCP (padrão: False)
        """
        self.broker_host = broker_host
        self.broker_port = broker_port
        self.broker_path = broker_path
        self.use_websockets = use_websockets
        self.client = None
        self.connected = False
        self.simulation_mode = False  # sem broker: só histórico local
        self.connection_failures = 0
        self.last_connection_attempt = None

        self.alert_history: List[dict] = []
        self.max_alert_history = 100

        # Cooldown por chave de alerta
        self.last_alert_times = {}
        self.alert_cooldown = 60

        self.published = {'episode': 0, 'metrics': 0, 'alert': 0}

        self._setup_client()

    def _setup_client(self):
        """Configura o cliente MQTT."""
        if self.use_websockets:
            self.client = mqtt.Client(transport='websockets')
            self.client.ws_set_options(path=self.broker_path)
        else:
            self.client = mqtt.Client()

        self.client.on_connect = self._on_connect
        self.client.on_disconnect = self._on_disconnect
        self.client.on_publish = self._on_publish
        self.client.reconnect_delay_set(min_delay=1, max_delay=120)

    @property
    def broker_address(self) -> str:
        suffix = self.broker_path if self.use_websockets else ''
        return f'{self.broker_host}:{self.broker_port}{suffix}'

    def _on_connect(self, client, userdata, flags, rc):
        """Callback quando conecta ao broker."""
        if rc == 0:
            previous_failures = self.connection_failures
            self.connected = True
            self.simulation_mode = False
            self.connection_failures = 0
            logger.info(f"Conectado ao broker MQTT em {self.broker_address}")
            if previous_failures > 0:
                self._add_alert_to_history(self._alert_payload(
                    'comunicação',
                    f'Conexão MQTT restabelecida após {previous_failures} tentativas',
                    'média',
                    {'broker': self.broker_address, 'tentativas_anteriores': previous_failures},
                ))
        else:
            self.connected = False
            self.connection_failures += 1
            logger.error(f"Falha ao conectar ao broker (código: {rc})")
            if self.connection_failures >= 3:
                self._enter_simulation_mode(f'Falha ao conectar ao broker MQTT (código: {rc})',
                                            {'codigo_erro': rc})

    def _on_disconnect(self, client, userdata, rc):
        """Callback quando desconecta do broker."""
        was_connected = self.connected
        self.connected = False
        logger.info("Desconectado do broker MQTT")
        if was_connected and rc != 0:
            self.connection_failures += 1
            self._add_alert_to_history(self._alert_payload(
                'comunicação', f'Conexão MQTT perdida inesperadamente (código: {rc})', 'alta',
                {'broker': self.broker_address, 'codigo_erro': rc},
            ))

    def _on_publish(self, client, userdata, mid):
        logger.debug(f"Mensagem publicada. MID: {mid}")

    def _enter_simulation_mode(self, message: str, data: Optional[dict] = None):
        self.simulation_mode = True
        logger.warning(f"⚠️ {message}. Modo simulação ativado.")
        self._add_alert_to_history(self._alert_payload(
            'comunicação', f'{message}. Modo simulação ativado.', 'alta',
            {'broker': self.broker_address, 'tentativas': self.connection_failures,
             'modo_simulacao': True, **(data or {})},
        ))

    def connect(self, timeout=5):
        """
        Conecta ao broker MQTT.

        Args:
            timeout: Tempo máximo de espera para conexão (segundos)

        Returns:
            True se conectado com sucesso, False caso contrário
        """
        if self.connected:
            return True
        if self.simulation_mode and self.connection_failures >= 5:
            logger.debug("Em modo simulação, pulando tentativa de conexão")
            return False

        self.last_connection_attempt = datetime.now()
        try:
            sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            sock.settimeout(2)
            result = sock.connect_ex((self.broker_host, self.broker_port))
            sock.close()
        except socket.gaierror as e:
            self.connection_failures += 1
            self._enter_simulation_mode(f'Erro de DNS ao resolver {self.broker_host}',
                                        {'erro': str(e)})
            return False
        except OSError as e:
            logger.warning(f"Erro ao testar conectividade: {e}")
            result = 0
        if result != 0:
            self.connection_failures += 1
            self._enter_simulation_mode(f'Host {self.broker_address} não acessível')
            return False

        try:
            logger.info(f"Tentando conectar ao broker MQTT {self.broker_address}...")
            if self.client is None:
                self._setup_client()
            self.client.connect_async(self.broker_host, self.broker_port, keepalive=60)
            self.client.loop_start()

            waited = 0.0
            while waited < timeout:
                if self.connected:
                    return True
                time.sleep(0.1)
                waited += 0.1

            self.connection_failures += 1
            logger.warning(f"Timeout ao conectar ao broker MQTT após {timeout}s")
            self.client.loop_stop()
            if self.connection_failures >= 2:
                self._enter_simulation_mode(
                    f'Falha ao conectar ao broker MQTT após {self.connection_failures} tentativas',
                    {'timeout': timeout})
            return False
        except Exception as e:
            self.connection_failures += 1
            logger.error(f"Erro ao conectar ao broker: {e}", exc_info=True)
            try:
                self.client.loop_stop()
            except Exception:
                pass
            if self.connection_failures >= 3:
                self._enter_simulation_mode(f'Erro ao conectar ao broker MQTT: {e}',
                                            {'tipo_erro': type(e).__name__})
            return False

    def disconnect(self):
        """Desconecta do broker MQTT."""
        if self.client:
            self.client.loop_stop()
            self.client.disconnect()
            self.connected = False

    def _add_alert_to_history(self, alert_payload):
        self.alert_history.append(alert_payload)
        if len(self.alert_history) > self.max_alert_history:
            self.alert_history = self.alert_history[-self.max_alert_history:]

    @staticmethod
    def _alert_payload(category, message, severity, data=None) -> dict:
        return {
            'timestamp': datetime.now().isoformat(),
            'tipo': category,
            'mensagem': message,
            'severidade': severity,
            'dados': data if data is not None else {},
        }

    def _publish(self, topic: str, payload: dict, kind: str) -> bool:
        """
        Publica o payload em JSON; em modo simulação apenas registra.

        Returns:
            True se publicado (ou absorvido pelo modo simulação)
        """
        if self.simulation_mode:
            logger.debug(f"[MODO SIMULAÇÃO] {kind} não publicado em {topic}")
            return True
        if not self.connected and not self.connect():
            logger.debug(f"[MODO SIMULAÇÃO] {kind} não publicado (sem conexão)")
            return False
        try:
            result = self.client.publish(topic, json.dumps(payload), qos=1)
        except Exception as e:
            logger.error(f"Exceção ao publicar {kind}: {e}")
            self.connection_failures += 1
            return False
        if result.rc != mqtt.MQTT_ERR_SUCCESS:
            logger.error(f"Erro ao publicar {kind}. Código: {result.rc}")
            self.connection_failures += 1
            return False
        self.published[kind] += 1
        return True

    def publish_alert(self, alert_category, message, severity='média', data=None):
        """
        Publica alerta.

        Args:
            alert_category: 'invariante', 'orçamento' ou 'comunicação'
            message: Descrição human-readable do alerta
            severity: 'baixa', 'média', 'alta' ou 'crítica'
            data: Valores relevantes (opcional)
        """
        payload = self._alert_payload(alert_category, message, severity, data)
        self._add_alert_to_history(payload)
        if self.simulation_mode:
            logger.info(f"[MODO SIMULAÇÃO] Alerta (não publicado): {message}")
        return self._publish(TOPIC_ALERT, payload, 'alert')

    def publish_episode(self, summary: dict):
        """
        Publica o resumo de um episódio.

        Args:
            summary: Campos do resultado (episode_id, config, success, steps, reason...)
        """
        return self._publish(TOPIC_EPISODE, {'timestamp': datetime.now().isoformat(), **summary},
                             'episode')

    def publish_metrics(self, rows: Iterable[dict]):
        """Publica cada linha da tabela de métricas."""
        ok = True
        for row in rows:
            ok = self._publish(TOPIC_METRICS, {'timestamp': datetime.now().isoformat(), **row},
                               'metrics') and ok
        return ok

    def _cooled_down(self, key: str) -> bool:
        now = datetime.now().timestamp()
        if now - self.last_alert_times.get(key, 0) < self.alert_cooldown:
            return False
        self.last_alert_times[key] = now
        return True

    def check_episode_alerts(self, summary: dict):
        """
        Alerta de orçamento quando o episódio terminou por esgotamento.
        Um alerta por (configuração, motivo) a cada cooldown.

        Returns:
            True se um alerta foi emitido
        """
        reason = summary.get('reason')
        if reason not in BUDGET_REASONS:
            return False
        key = f"budget:{summary.get('config')}:{reason}"
        if not self._cooled_down(key):
            return False
        self.publish_alert(
            alert_category='orçamento',
            message=f"Episódio {summary.get('episode_id')} esgotou o orçamento ({reason})",
            severity='média',
            data={k: summary.get(k) for k in ('episode_id', 'config', 'steps', 'reason')},
        )
        return True

    def check_invariant_alerts(self, violations: List[str], source: str = 'harness'):
        """
        Alerta crítico com a lista de violações de invariante.

        Returns:
            True se um alerta foi emitido
        """
        if not violations:
            return False
        self.publish_alert(
            alert_category='invariante',
            message=f"{len(violations)} violação(ões) de invariante em {source}",
            severity='crítica',
            data={'origem': source, 'violacoes': list(violations)[:20]},
        )
        return True

    def is_connected(self):
        return self.connected

    def get_status(self):
        """Retorna status completo do cliente MQTT."""
        return {
            'connected': self.connected,
            'simulation_mode': self.simulation_mode,
            'broker_host': self.broker_host,
            'broker_port': self.broker_port,
            'broker_path': self.broker_path if self.use_websockets else None,
            'use_websockets': self.use_websockets,
            'connection_failures': self.connection_failures,
            'published': dict(self.published),
            'last_connection_attempt': self.last_connection_attempt.isoformat()
            if self.last_connection_attempt else None,
        }

    def get_alert_history(self, limit=50):
        """Retorna histórico de alertas."""
        return self.alert_history[-limit:] if limit else self.alert_history
