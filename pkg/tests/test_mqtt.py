import pytest

from backend.mqtt.client_mqtt import MQTTClient


@pytest.fixture
def client():
    """Cliente sem broker: tudo fica no histórico local."""
    mqtt_client = MQTTClient(broker_host='127.0.0.1', broker_port=1)
    mqtt_client.simulation_mode = True
    return mqtt_client


def test_simulation_mode_absorbs_publications(client):
    assert client.publish_episode({'episode_id': 'e0', 'success': True})
    assert client.publish_metrics([{'config': 'full', 'SR': 100.0}])
    assert client.published == {'episode': 0, 'metrics': 0, 'alert': 0}


def test_budget_alert_respects_cooldown(client):
    summary = {'episode_id': 'e0', 'config': 'full', 'steps': 1000, 'reason': 'max_steps'}
    assert client.check_episode_alerts(summary)
    assert not client.check_episode_alerts(dict(summary, episode_id='e1'))
    assert client.check_episode_alerts(dict(summary, config='no-CAP'))
    assert not client.check_episode_alerts(dict(summary, reason='stop'))

    alerts = client.get_alert_history()
    assert [a['tipo'] for a in alerts] == ['orçamento', 'orçamento']
    assert alerts[0]['dados']['episode_id'] == 'e0'


def test_invariant_alert(client):
    assert not client.check_invariant_alerts([])
    assert client.check_invariant_alerts(['full/seen: SR=90 > GC=80'], source='teste')
    alert = client.get_alert_history(limit=1)[0]
    assert alert['severidade'] == 'crítica'
    assert alert['dados'] == {'origem': 'teste', 'violacoes': ['full/seen: SR=90 > GC=80']}


def test_alert_history_is_bounded(client):
    client.max_alert_history = 3
    for k in range(5):
        client.publish_alert('invariante', f'alerta {k}')
    assert [a['mensagem'] for a in client.get_alert_history(limit=0)] == [
        'alerta 2', 'alerta 3', 'alerta 4']


def test_status(client):
    status = client.get_status()
    assert status['simulation_mode'] and not status['connected']
    assert status['broker_path'] is None
    assert status['last_connection_attempt'] is None


def test_unreachable_broker_falls_back():
    mqtt_client = MQTTClient(broker_host='127.0.0.1', broker_port=1)
    assert mqtt_client.connect(timeout=1) is False
    assert mqtt_client.simulation_mode
    assert mqtt_client.get_alert_history()[-1]['tipo'] == 'comunicação'
    assert mqtt_client.get_status()['last_connection_attempt'] is not None
