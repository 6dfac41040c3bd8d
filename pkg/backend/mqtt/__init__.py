# MQTT package

